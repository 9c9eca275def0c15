// @generated by scripts/gen_nemenyi_table.py; do not edit by hand.

/// Smallest number of methods in the table.
pub const K_MIN: usize = 2;
/// Largest number of methods in the table.
pub const K_MAX: usize = 20;

/// Nemenyi q at alpha = 0.05, indexed by `k - K_MIN`.
pub const Q_005: [f64; 19] = [
    1.9599639845,
    2.3437005864,
    2.5690317725,
    2.7277743709,
    2.8497054196,
    2.9483200175,
    3.0308784496,
    3.1017303413,
    3.1636835771,
    3.2186536073,
    3.2680039245,
    3.3127385934,
    3.3536177519,
    3.3912302838,
    3.4260413794,
    3.4584247073,
    3.4886847994,
    3.5170730087,
    3.5437991315,
];

/// Nemenyi q at alpha = 0.10, indexed by `k - K_MIN`.
pub const Q_010: [f64; 19] = [
    1.6448536270,
    2.0522927305,
    2.2913414969,
    2.4595157643,
    2.5885206019,
    2.6927321010,
    2.7798836082,
    2.8546064312,
    2.9198888401,
    2.9777682513,
    3.0296941832,
    3.0767334683,
    3.1196933331,
    3.1591988189,
    3.1957434330,
    3.2297234009,
    3.2614614896,
    3.2912239866,
    3.3192330595,
];
