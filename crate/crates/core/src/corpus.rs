//! Bundled problem statements and generators for brick and layered walls.

pub const WALL_1D: &str = include_str!("../fixtures/wall-1d.txt");
pub const SPOON: &str = include_str!("../fixtures/spoon.txt");
pub const WALL_3D: &str = include_str!("../fixtures/wall-3d.txt");

/// The bundled fixtures as (name, text).
pub fn fixtures() -> [(&'static str, &'static str); 3] {
    [("wall-1d", WALL_1D), ("spoon", SPOON), ("wall-3d", WALL_3D)]
}

const COUNTS: [&str; 13] =
    ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve"];

fn multiple(n: i64, sym: &str) -> String {
    match n {
        0 => "0".into(),
        1 => sym.into(),
        -1 => format!("- {sym}"),
        n if n < 0 => format!("- {}{sym}", -n),
        n => format!("{n}{sym}"),
    }
}

fn listing(items: &[String]) -> String {
    match items {
        [one] => one.clone(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
        [] => String::new(),
    }
}

fn touch(p: &[i64; 4], q: &[i64; 4]) -> bool {
    let x1 = (p[1] == q[0] || q[1] == p[0]) && p[2].max(q[2]) < p[3].min(q[3]);
    let x3 = (p[3] == q[2] || q[3] == p[2]) && p[0].max(q[0]) < p[1].min(q[1]);
    x1 || x3
}

/// A wall of bricks insulated in `x_2`, with Robin data on the extreme `x_1` faces. Each brick
/// is `[x1_lo, x1_hi, x3_lo, x3_hi]` in units of `L` along `x_1` and `b` along `x_3`, and
/// the parameter values are those of the wall-3d fixture. At most twelve bricks.
pub fn brick_wall(bricks: &[[i64; 4]]) -> String {
    assert!((1..COUNTS.len()).contains(&bricks.len()));
    let name = |i: usize| format!("Brick {}", i + 1);
    let names: Vec<String> = (0..bricks.len()).map(name).collect();
    let lower: Vec<String> = names.iter().map(|n| n.to_lowercase()).collect();
    let mut s = format!(
        "A wall separates inside air and outside air. The wall consists of {} brick{}: {}. ",
        COUNTS[bricks.len()],
        if bricks.len() == 1 { "" } else { "s" },
        listing(&lower)
    );
    for i in 0..bricks.len() {
        for j in i + 1..bricks.len() {
            if touch(&bricks[i], &bricks[j]) {
                s += &format!("{} connects to {}. ", names[i], lower[j]);
            }
        }
    }
    let x_min = bricks.iter().map(|b| b[0]).min().unwrap();
    let x_max = bricks.iter().map(|b| b[1]).max().unwrap();
    let left: Vec<String> = (0..bricks.len()).filter(|&i| bricks[i][0] == x_min).map(name).collect();
    let right: Vec<String> = (0..bricks.len()).filter(|&i| bricks[i][1] == x_max).map(name).collect();
    let verb = |v: &[String]| if v.len() == 1 { "is" } else { "are" };
    s += &format!("{} {} in communication with inside air at temperature $T_in$; ", listing(&left), verb(&left));
    s += &format!("{} {} in communication with outside air at temperature $T_out$.\n\n", listing(&right), verb(&right));
    s += "The coordinates are denoted $x_1$, $x_2$, and $x_3$; $x_1$ corresponds to distance through the wall. ";
    s += "Each brick is a parallelepiped of rectangular cross-section of dimensions $a$ (in $x_2$), $b$ (in $x_3$), $L$ (in $x_1$). ";
    let domains: Vec<String> = bricks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            format!(
                "the spatial domain of {} is ${} < x_1 < {}, 0 < x_2 < a, {} < x_3 < {}$",
                name(i),
                multiple(b[0], "L"),
                multiple(b[1], "L"),
                multiple(b[2], "b"),
                multiple(b[3], "b")
            )
        })
        .collect();
    s += &format!("{}.\n\nEach brick has thermal conductivity $k_b$.\n\n", capitalize(&domains.join("; ")));
    let face = |v: &[String]| if v.len() == 1 { "face" } else { "faces" };
    s += &format!(
        "{} {} exposed to inside air over the {} at $x_1 = {}$ through heat transfer coefficient $h_in$. ",
        listing(&left),
        verb(&left),
        face(&left),
        multiple(x_min, "L")
    );
    s += &format!(
        "{} {} exposed to outside air over the {} at $x_1 = {}$ through heat transfer coefficient $h_out$. ",
        listing(&right),
        verb(&right),
        face(&right),
        multiple(x_max, "L")
    );
    s += "The remainder of the boundary is insulated.\n\n";
    s += &format!(
        "We introduce a nondimensional heat transfer rate $H$ given by $Q/(k_b(T_in-T_out)a)$; here $Q$ denotes the heat transfer rate into {} over the face at $x_1 = {}$. ",
        left[0],
        multiple(x_min, "L")
    );
    s += "Develop a lower bound and also an upper bound for $H$. You may use the following parameter values: \
          $T_in = 23$, $T_out = 0$, $a = 0.1$, $b = 0.1$, $L = 0.05$, $h_in = 10$, $h_out = 100$, and $k_b = 0.5$.\n";
    s
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

const WOODS: [&str; 5] = ["fir", "pine", "cedar", "oak", "maple"];

fn hundredths(n: u32) -> String {
    format!("{}.{:02}", n / 100, n % 100)
}

/// A layered wall between two Robin sides, insulated laterally, asking for the heat rate
/// into the first layer. Each layer is `(length in cm, conductivity in W/(m K) x 1000)`;
/// at most five layers.
pub fn layered_wall(layers: &[(u32, u32)], h_in: u32, h_out: u32, t_in: i32, t_out: i32) -> String {
    assert!((1..=WOODS.len()).contains(&layers.len()));
    let n = layers.len();
    let layer = |i: usize| format!("{} layer", WOODS[i]);
    let the: Vec<String> = (0..n).map(|i| format!("the {}", layer(i))).collect();
    let mut s = String::from(
        "A composite wall separates inside air and outside air. The inside air is maintained at temperature $T_in$; \
         the outside air is maintained at temperature $T_out$. ",
    );
    let a: Vec<String> = (0..n).map(|i| format!("a {}", layer(i))).collect();
    s += &format!("The composite wall comprises {} layer{}: {}. ", COUNTS[n], if n == 1 { "" } else { "s" }, listing(&a));
    for i in 1..n {
        s += &format!("{} connects to {}. ", capitalize(&the[i - 1]), the[i]);
    }
    s += &format!("{} is exposed to the inside air; {} is exposed to the outside air.\n\n", capitalize(&the[0]), the[n - 1]);
    s += "The composite wall is a right cylinder with rectangular cross-section of dimensions $a$ and $b$; \
          the coordinate through the wall is $x$. ";
    let mut x = 0;
    let domains: Vec<String> = layers
        .iter()
        .enumerate()
        .map(|(i, &(len, _))| {
            let d = format!("the spatial domain of {} is ${} < x < {}$", the[i], hundredths(x), hundredths(x + len));
            x += len;
            d
        })
        .collect();
    s += &format!("{}.\n\n", capitalize(&domains.join("; ")));
    s += &format!(
        "Let $h_in$ denote the heat transfer coefficient from inside air to {} prescribed over the face at $ x = 0 $; \
         let $h_out$ denote the heat transfer coefficient from {} to outside air prescribed over the face $ x = {} $. ",
        layer(0),
        layer(n - 1),
        hundredths(x)
    );
    let names: Vec<String> = (0..n).map(layer).collect();
    s += &format!("The {} {} insulated on the lateral faces.\n\n", listing(&names), if n == 1 { "is" } else { "are" });
    let ks: Vec<String> = (0..n).map(|i| format!("the thermal conductivity of {} is $k_{}$", the[i], i + 1)).collect();
    s += &format!("{}.\n\n", capitalize(&ks.join("; ")));
    s += "Find the heat transfer rate into the fir layer over the face at $x = 0$. You may use the following parameter values: ";
    let mut values = vec![
        format!("$T_in = {t_in}$"),
        format!("$T_out = {t_out}$"),
        "$a = 0.1$".into(),
        "$b = 0.1$".into(),
        format!("$h_in = {h_in}$"),
        format!("$h_out = {h_out}$"),
    ];
    values.extend(layers.iter().enumerate().map(|(i, &(_, k))| format!("$k_{} = {}$", i + 1, k as f64 / 1000.0)));
    s += &format!("{}.\n", listing(&values));
    s
}
