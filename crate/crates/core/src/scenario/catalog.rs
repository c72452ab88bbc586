//! Built-in metrics, congruences and ready-to-run scenario templates.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub keys: &'static str,
    pub description: &'static str,
}

pub const METRIC_CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "minkowski",
        keys: "x0, v0",
        description: "flat space, signature (-, +, ..., +); dimension from x0",
    },
    CatalogEntry {
        name: "schwarzschild",
        keys: "mass, x0 = (t, r, theta, phi), v0",
        description: "Schwarzschild exterior, defined for r > 2m off the polar axis",
    },
    CatalogEntry {
        name: "constant-curvature",
        keys: "curvature, x0, v0",
        description: "conformally flat chart of constant curvature K; tidal matrix K I",
    },
    CatalogEntry {
        name: "diagonal",
        keys: "entries = (\"expr in x0..\", ...), x0, v0",
        description: "diagonal metric from expressions; derivatives by finite differences",
    },
];

pub const CONGRUENCE_CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "zero",
        keys: "v0",
        description: "no velocity or acceleration gradient; reduces to the geodesic case",
    },
    CatalogEntry {
        name: "rindler",
        keys: "x0 with x > |t|",
        description: "uniformly accelerated observers in Minkowski space",
    },
    CatalogEntry {
        name: "schwarzschild-static",
        keys: "mass, x0 with r > 2m",
        description: "observers held at fixed r, theta, phi",
    },
];

pub const KIND_CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "jacobi-geodesic",
        keys: "metric, x0, v0",
        description: "H = [[K(tau), 0], [0, I]] from the tidal matrix along a geodesic",
    },
    CatalogEntry {
        name: "jacobi-nongeodesic",
        keys: "metric, x0, congruence",
        description: "tidal matrix corrected by the acceleration gradient of a congruence",
    },
    CatalogEntry {
        name: "jacobi-first-order",
        keys: "M (n*n entries)",
        description: "H = [[0, M], [M^T, 0]]; positions obey d(zeta)/dtau = M^T zeta",
    },
    CatalogEntry {
        name: "constant-curvature",
        keys: "K (scalar or list)",
        description: "C = [[diag K, 0], [0, I]]",
    },
    CatalogEntry {
        name: "metric-second-order",
        keys: "G (n*n entries, numbers or \"expr in tau\") or b",
        description: "H = [[G, 0], [0, I]]; G must be symmetric",
    },
    CatalogEntry {
        name: "metric-quadratic-form",
        keys: "G or b",
        description: "H = [[G, 0], [0, 0]]; G must be symmetric",
    },
    CatalogEntry {
        name: "metric-first-order",
        keys: "G or b",
        description: "H = [[0, M], [M^T, 0]] with M_ij = G_ji",
    },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const TEMPLATES: &[Template] = &[
    Template {
        name: "flat-to-flat",
        description: "identical free systems; T stays the identity",
        text: "\
scenario.name = \"flat-to-flat\"
source.kind = jacobi-geodesic
source.metric = minkowski
source.x0 = (0, 0, 0, 0)
source.v0 = (1, 0, 0, 0)
target.kind = constant-curvature
target.K = 0
integration.h = 0.01
integration.tau_max = 1
",
    },
    Template {
        name: "flat-to-sphere",
        description: "free Jacobi fields mapped onto K = 1 oscillators",
        text: "\
scenario.name = \"flat-to-sphere\"
source.kind = jacobi-geodesic
source.metric = minkowski
source.x0 = (0, 0, 0, 0)
source.v0 = (1, 0, 0, 0)
target.kind = constant-curvature
target.K = 1
integration.tau_max = 3
",
    },
    Template {
        name: "k2-to-k1",
        description: "analytic constant-curvature source and target",
        text: "\
scenario.name = \"k2-to-k1\"
scenario.n = 3
source.kind = constant-curvature
source.K = 2
target.kind = constant-curvature
target.K = 1
integration.tau_max = 5
",
    },
    Template {
        name: "schwarzschild-radial",
        description: "radial geodesic from r = 10 (m = 1) mapped onto K = 1",
        text: "\
scenario.name = \"schwarzschild-radial\"
source.kind = jacobi-geodesic
source.metric = schwarzschild
source.mass = 1
source.x0 = (0, 10, 1.5707963267948966, 0)
source.v0 = (1, 0, 0, 0)
target.kind = constant-curvature
target.K = 1
integration.h = 0.001
integration.tau_max = 5
",
    },
    Template {
        name: "rindler",
        description: "accelerated observer with the Rindler congruence onto flat space",
        text: "\
scenario.name = \"rindler\"
source.kind = jacobi-nongeodesic
source.metric = minkowski
source.congruence = rindler
source.x0 = (0, 1, 0, 0)
target.kind = constant-curvature
target.K = 0
integration.h = 0.001
integration.tau_max = 2
",
    },
    Template {
        name: "metric-forms",
        description: "time-dependent second-order metric Hamiltonian onto first-order form",
        text: "\
scenario.name = \"metric-forms\"
source.kind = metric-second-order
source.G = (\"1 + 0.5*sin(tau)\", 0.1, 0.1, 2)
target.kind = metric-first-order
target.G = (0.2, 1, -1, 0.3)
integration.h = 0.001
integration.tau_max = 2
",
    },
];

pub fn template(name: &str) -> Option<&'static Template> {
    TEMPLATES.iter().find(|t| t.name == name)
}

/// Plain-text listing for the CLI.
pub fn render_catalog() -> String {
    let mut out = String::new();
    let section = |out: &mut String, title: &str, entries: &[CatalogEntry]| {
        out.push_str(title);
        out.push('\n');
        for e in entries {
            out.push_str(&format!("  {:<22} {}\n", e.name, e.description));
            out.push_str(&format!("  {:<22} keys: {}\n", "", e.keys));
        }
        out.push('\n');
    };
    section(&mut out, "metrics", METRIC_CATALOG);
    section(&mut out, "congruences", CONGRUENCE_CATALOG);
    section(&mut out, "kinds", KIND_CATALOG);
    out.push_str("templates\n");
    for t in TEMPLATES {
        out.push_str(&format!("  {:<22} {}\n", t.name, t.description));
    }
    out
}
