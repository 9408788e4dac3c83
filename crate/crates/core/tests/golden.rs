mod common;

use common::{displayed, golden, strengthen};

fn check(stem: &str) {
    let (spec, sharp) = strengthen(stem);
    let got = displayed(&spec, &sharp);
    assert!(golden(stem).same_up_to_labels(&got), "{stem}: got labels {:?}, tables differ", got.labels());
}

#[test]
fn explosion() {
    check("example1");
}

#[test]
fn partial_explosion() {
    check("example2");
}

#[test]
fn double_negation_elimination() {
    check("example3");
}

#[test]
fn double_negation_introduction_on_top() {
    check("example3n");
}

#[test]
fn consistency_operator() {
    check("example4");
}

#[test]
fn strong_negation() {
    check("example5");
}

#[test]
fn strong_negation_explosive() {
    check("example5x");
}

#[test]
fn modal_box() {
    check("example6");
}

#[test]
fn lukasiewicz_cut_down() {
    check("example7");
}
