use execmut_core::dsl::{eval_dsl, Term};
use execmut_core::minipy::{parse_args, run_source, ExecStatus, Limits, Value};
use execmut_core::transpile::translate;

const TERM: &str = "(map (if (> (index 0 a2) 2) (length a1)) (if (< (length a2) 3) (tail a1) empty))";

const SOURCE: &str = "def f(a1, a2):
    v2 = []
    a1.pop(0)
    if len(a2) < 3:
        v3 = a1
    else:
        v3 = v2
    for i in range(len(v3)):
        if a2[0] > 2:
            v1 = len(a1)
        else:
            v1 = v3[i]
        v3[i] = v1
    return v3
";

#[test]
fn nested_map_and_if_lowering() {
    let term: Term = TERM.parse().unwrap();
    let prog = translate(&term, 2).unwrap();
    assert_eq!(prog.source, SOURCE);
    assert_eq!(prog.loc, 14);
}

#[test]
fn golden_runs_like_the_term() {
    let term: Term = TERM.parse().unwrap();
    for (input, expected) in [("[1, 2, 3], [5]", "[2, 2]"), ("[1, 2, 3], [0, 1]", "[2, 3]"), ("[7], [1, 1, 1]", "[]")] {
        let args = parse_args(input).unwrap();
        let r = run_source(SOURCE, "f", &args, Limits::default()).unwrap();
        assert_eq!(r.status, ExecStatus::Ok, "{input}");
        assert_eq!(r.output.as_ref().unwrap().repr(), expected, "{input}");
        let values: Vec<Value> = args.iter().map(|a| Value::from_literal(a).unwrap()).collect();
        assert_eq!(eval_dsl(&term, &values).unwrap().repr(), expected, "{input}");
    }
}
