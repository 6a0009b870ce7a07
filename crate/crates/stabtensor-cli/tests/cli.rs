use std::io::Write;
use std::process::{Command, Output, Stdio};

fn stabtensor(job: &str, args: &[&str]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stabtensor"))
        .args(["--job", "-"])
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(job.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn example_over_z() {
    let o = stabtensor("ring Z; module A rel [[5]]; cmd stabilize A Z", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("A ⊗̃ Z = Z/5"), "{}", stdout(&o));
}

#[test]
fn asymptotic_value_over_z() {
    let o = stabtensor("ring Z; module A rel [[5]]; cmd asymptotic A Z n=0", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("T_0(A, Z) = 0, StabilizedAt(1)"), "{}", stdout(&o));
}

#[test]
fn quasi_frobenius_asymptotic() {
    let o = stabtensor("ring Z/4; module A rel [[2]]; cmd asymptotic A A n=0", &["--emit", "machine"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"value\": \"Z/2\""), "{out}");
    assert!(out.contains("\"certificate\": \"StabilizedAt(0)\""), "{out}");
    assert!(out.contains("\"truncation\": \"exact\""), "{out}");
}

#[test]
fn cube_suite() {
    let o = stabtensor("ring Z/4; cmd verify-cubes count=25", &["--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("25/25 anticommutation OK"), "{}", stdout(&o));
}

#[test]
fn machine_reports_are_reproducible() {
    let job = "ring Z/8; module A gens 2 rel [[2, 0], [0, 4]]; cmd vogel-roundtrip A A n=1 count=4";
    let a = stabtensor(job, &["--emit", "machine", "--seed", "3"]);
    let b = stabtensor(job, &["--emit", "machine", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn omega_of_the_z4_extension() {
    let job = "ring Z/4\nmodule A rel [[2]]\nmap f A R [[2]]\nmap g R A [[1]]\nses S f g\ncmd omega A S n=1\n";
    let o = stabtensor(job, &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Z/2 → Z/2, iso"), "{out}");
    assert!(!out.contains("FAIL"), "{out}");
}

#[test]
fn verify_all_passes_over_z9() {
    let o = stabtensor("ring Z/9; module A rel [[3]]; cmd verify-all A A count=6", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn truncation_override_is_reported_and_recertified() {
    let job = "ring Z; module A rel [[12]]; module B rel [[4]]; cmd stabilize A B";
    let o = stabtensor(job, &["--truncation", "4", "--emit", "machine"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("\"truncation_override\": 4"), "{out}");
    assert!(out.contains("\"truncation certified\": true"), "{out}");
    // too low a level is refused rather than trusted
    let low = stabtensor(job, &["--truncation", "1"]);
    assert_eq!(low.status.code(), Some(2));
}

#[test]
fn parse_errors_name_the_position() {
    let o = stabtensor("ring Z\nmodule A rel [[2]]\ncmd stabilize A B\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("unknown name `B` at 3:17"), "{err}");
    let o = stabtensor("ring Z/1; cmd verify-cubes", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("bad ring"));
}
