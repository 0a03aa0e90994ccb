use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
        .display()
        .to_string()
}

fn oclk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oclk"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn hotel_check(snapshot: &str, constraints: &str, format: &str) -> Output {
    oclk(&[
        "check",
        "--model",
        &corpus("hotel/model.toml"),
        "--constraints",
        &corpus(constraints),
        "--snapshot",
        &corpus(snapshot),
        "--format",
        format,
    ])
}

#[test]
fn exit_codes_do_not_depend_on_format() {
    for (snap, code) in [
        ("hotel/satisfying/state.toml", 0),
        ("hotel/mutants/rule1-overfull.toml", 1),
        ("hotel/mutants/rule3-unregistered.toml", 1),
    ] {
        let text = hotel_check(snap, "hotel/constraints.ocl", "text");
        let machine = hotel_check(snap, "hotel/constraints.ocl", "machine");
        assert_eq!(text.status.code(), Some(code), "{snap}: {}", stdout(&text));
        assert_eq!(machine.status.code(), Some(code), "{snap}");
    }
}

#[test]
fn machine_rows_are_tab_separated() {
    let o = hotel_check(
        "hotel/mutants/rule1-overfull.toml",
        "hotel/constraints.ocl",
        "machine",
    );
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "violated\tRoom:3\troom2"), "{out}");
    assert!(out.lines().all(|l| l.split('\t').count() == 3), "{out}");
}

#[test]
fn the_plain_capacity_rule_rejects_the_extra_bed() {
    let o = hotel_check(
        "hotel/satisfying/state.toml",
        "hotel/strict-capacity.ocl",
        "machine",
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("violated\t"), "{}", stdout(&o));
    assert!(stdout(&o).contains("\troom1"), "{}", stdout(&o));
}

#[test]
fn static_errors_exit_with_two() {
    for (model, file, needle) in [
        ("hotel/model.toml", "errors/all-instances.ocl", "infinite"),
        ("errors/shapes.toml", "errors/ambiguous-if.ocl", "oclAsType"),
        (
            "library/borrow/model.toml",
            "errors/joint-self.ocl",
            "ambiguous",
        ),
        (
            "library/borrow/model.toml",
            "errors/event-self.ocl",
            "nothing to refer to",
        ),
    ] {
        let o = oclk(&[
            "typecheck",
            "--model",
            &corpus(model),
            "--constraints",
            &corpus(file),
        ]);
        assert_eq!(o.status.code(), Some(2), "{file}");
        assert!(stderr(&o).contains(needle), "{file}: {}", stderr(&o));
    }
    let o = oclk(&[
        "typecheck",
        "--model",
        &corpus("errors/shapes.toml"),
        "--constraints",
        &corpus("errors/resolved-if.ocl"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn missing_files_exit_with_two() {
    let o = oclk(&[
        "check",
        "--model",
        "/nonexistent/model.toml",
        "--snapshot",
        "/nonexistent/s.toml",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_two() {
    let o = oclk(&[
        "check",
        "--model",
        &corpus("scalar/model.toml"),
        "--constraints",
        &corpus("scalar/equation.ocl"),
        "--snapshot",
        &corpus("scalar/a0.toml"),
        "--max-iter",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did not converge"), "{}", stderr(&o));
}

#[test]
fn eval_prints_values() {
    let hotel = |expr: &str| {
        oclk(&[
            "eval",
            "--model",
            &corpus("hotel/model.toml"),
            "--snapshot",
            &corpus("hotel/satisfying/state.toml"),
            "--self",
            "room1",
            expr,
        ])
    };
    let o = hotel("guests->size = 3");
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "true"));
    let o = hotel("bathroom.usage + 1");
    assert_eq!(stdout(&o).trim(), "4");
    let o = hotel("1 / 0");
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(1), "undefined"));
    let o = oclk(&["eval", "Set{1, 2}->including(3)->sum()"]);
    assert_eq!(stdout(&o).trim(), "6");
}

#[test]
fn invocations_and_traces_from_the_command_line() {
    let o = oclk(&[
        "check",
        "--model",
        &corpus("library/borrow/model.toml"),
        "--constraints",
        &corpus("library/borrow/operation.ocl"),
        "--invocation",
        &corpus("library/borrow/borrow-today.toml"),
        "--format",
        "machine",
    ]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{out}{}", stderr(&o));
    assert!(out.contains("violated\tLibrary::borrow:pre\t"), "{out}");
    assert!(out.contains("satisfied\tLibrary::borrow\t"), "{out}");

    let o = oclk(&[
        "trace",
        "--model",
        &corpus("cards/model.toml"),
        "--constraints",
        &corpus("cards/cards.ocl"),
        "--trace",
        &corpus("cards/traces/called-wrong-letter.toml"),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn undefined_verdicts_can_be_tolerated() {
    let base = [
        "check",
        "--model",
        &corpus("hotel/model.toml"),
        "--constraints",
        &corpus("hotel/ensuite-usage.ocl"),
        "--snapshot",
        &corpus("hotel/satisfying/state.toml"),
        "--format",
        "machine",
    ];
    let o = oclk(&base);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(
        stdout(&o).contains("undefined\tRoom:2\troom2"),
        "{}",
        stdout(&o)
    );
    let mut tolerant = base.to_vec();
    tolerant.push("--undefined-ok");
    assert_eq!(oclk(&tolerant).status.code(), Some(0));
}
