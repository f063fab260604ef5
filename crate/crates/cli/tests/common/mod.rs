//! Shared test data.

/// Precedence and associativity golden cases, as fully parenthesized prefix forms.
pub const GOLDEN: [(&str, &str); 30] = [
    ("1 + 2 + 3", "(+ (+ 1 2) 3)"),
    ("1 - 2 - 3", "(- (- 1 2) 3)"),
    ("1 - 2 + 3", "(+ (- 1 2) 3)"),
    ("2 * 3 * 4", "(* (* 2 3) 4)"),
    ("8 / 4 / 2", "(/ (/ 8 4) 2)"),
    ("8 / 4 * 2", "(* (/ 8 4) 2)"),
    ("1 + 2 * 3", "(+ 1 (* 2 3))"),
    ("1 * 2 + 3", "(+ (* 1 2) 3)"),
    ("(1 + 2) * 3", "(* (+ 1 2) 3)"),
    ("x1 ^ 2 ^ 3", "(^ x1 (^ 2 3))"),
    ("(x1 ^ 2) ^ 3", "(^ (^ x1 2) 3)"),
    ("2 * x1 ^ 2", "(* 2 (^ x1 2))"),
    ("x1 ^ 2 * 2", "(* (^ x1 2) 2)"),
    ("-x1", "(neg x1)"),
    ("-x1 ^ 2", "(neg (^ x1 2))"),
    ("(-x1) ^ 2", "(^ (neg x1) 2)"),
    ("x1 ^ -2", "(^ x1 (neg 2))"),
    ("--x1", "(neg (neg x1))"),
    ("-x1 * x2", "(* (neg x1) x2)"),
    ("x1 * -x2", "(* x1 (neg x2))"),
    ("1 - -x1", "(- 1 (neg x1))"),
    ("-2 ^ -2 ^ 2", "(neg (^ 2 (neg (^ 2 2))))"),
    ("sin(x1) + i*cos(x2)", "(+ (sin x1) (* i (cos x2)))"),
    ("sin(x1) ^ 2", "(^ (sin x1) 2)"),
    ("exp(i*x1)", "(exp (* i x1))"),
    ("log(eps^2 - abs2(x))", "(log (- (^ eps 2) (abs2 x)))"),
    ("sqrt(1 + x1) / 2", "(/ (sqrt (+ 1 x1)) 2)"),
    ("2.5e-1 * x1", "(* 2.5e-1 x1)"),
    ("1/(2 + sin(x1))", "(/ 1 (+ 2 (sin x1)))"),
    ("a*b/c - d^e^f", "(- (/ (* a b) c) (^ d (^ e f)))"),
];
