#include "epcore/cli.hpp"

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "epcore/errors.hpp"
#include "epcore/finder.hpp"
#include "epcore/linalg.hpp"
#include "epcore/models.hpp"
#include "epcore/monodromy.hpp"
#include "epcore/parallel.hpp"
#include "epcore/response.hpp"
#include "epcore/twolevel.hpp"

namespace epcore::cli {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------
// output table

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string cell_to_string(const Cell& c) {
    if (std::holds_alternative<double>(c)) return format_double(std::get<double>(c));
    if (std::holds_alternative<std::int64_t>(c))
        return std::to_string(std::get<std::int64_t>(c));
    return std::get<std::string>(c);
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char byte : data) {
        h ^= byte;
        h *= 1099511628211ull;
    }
    return h;
}

void write_csv(std::ostream& os, const Table& t, const std::string& meta) {
    os << "# " << meta << "\n";
    for (size_t c = 0; c < t.columns.size(); ++c)
        os << t.columns[c] << (c + 1 < t.columns.size() ? "," : "");
    os << "\n";
    for (const auto& row : t.rows) {
        for (size_t c = 0; c < row.size(); ++c)
            os << cell_to_string(row[c]) << (c + 1 < row.size() ? "," : "");
        os << "\n";
    }
}

void write_json(std::ostream& os, const Table& t, const json& meta) {
    json out;
    out["meta"] = meta;
    out["header"] = t.columns;
    json records = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& cell : row) {
            if (std::holds_alternative<double>(cell))
                r.push_back(std::get<double>(cell));
            else if (std::holds_alternative<std::int64_t>(cell))
                r.push_back(std::get<std::int64_t>(cell));
            else
                r.push_back(std::get<std::string>(cell));
        }
        records.push_back(std::move(r));
    }
    out["records"] = std::move(records);
    os << out.dump(2) << "\n";
}

// ----------------------------------------------------------------------
// config parsing

Complex parse_complex(const json& j, const std::string& what) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return Complex(j[0].get<double>(), j[1].get<double>());
    throw ConfigError(what + " must be a number or [re, im]");
}

Complex require_complex(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
    return parse_complex(j.at(key), key);
}

double require_number(const json& j, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ConfigError("missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

Matrix parse_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty matrix");
    const Eigen::Index n = static_cast<Eigen::Index>(j.size());
    Matrix M(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const json& row = j[static_cast<size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw ConfigError(what + " must be square");
        for (Eigen::Index c = 0; c < n; ++c)
            M(r, c) = parse_complex(row[static_cast<size_t>(c)], what);
    }
    return M;
}

Vector parse_vector(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty vector");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = parse_complex(j[static_cast<size_t>(i)], what);
    return v;
}

twolevel::TwoLevelParams parse_twolevel_params(const json& j) {
    twolevel::TwoLevelParams p;
    p.omega1 = require_complex(j, "omega1");
    p.omega2 = require_complex(j, "omega2");
    if (j.contains("eps1")) p.eps1 = parse_complex(j.at("eps1"), "eps1");
    if (j.contains("eps2")) p.eps2 = parse_complex(j.at("eps2"), "eps2");
    p.delta1 = require_complex(j, "delta1");
    p.delta2 = require_complex(j, "delta2");
    return p;
}

MatrixFamily parse_family(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError("family needs a 'type' field");
    const std::string type = j.at("type").get<std::string>();
    if (type == "twolevel") return parse_twolevel_params(j).family();
    if (type == "inline") {
        MatrixFamily fam;
        if (!j.contains("H0")) throw ConfigError("inline family needs 'H0'");
        fam.H0 = parse_matrix(j.at("H0"), "H0");
        if (!j.contains("generators") || !j.at("generators").is_array() ||
            j.at("generators").empty())
            throw ConfigError("inline family needs a nonempty 'generators' list");
        for (const auto& g : j.at("generators"))
            fam.generators.push_back(parse_matrix(g, "generator"));
        fam.validate();
        return fam;
    }
    if (type == "lipkin") {
        const int N = static_cast<int>(require_number(j, "N"));
        const std::string block = j.value("block", std::string("even"));
        if (block == "full") return models::lipkin(N);
        const models::LipkinBlocks blocks = models::lipkin_blocks(N);
        if (block == "even") return blocks.even;
        if (block == "odd") return blocks.odd;
        throw ConfigError("lipkin block must be even|odd|full");
    }
    if (type == "pt_dimer") return models::pt_dimer(require_number(j, "kappa"));
    if (type == "rpa") return models::rpa_block(require_number(j, "a"));
    if (type == "ep3") return models::ep3_family(require_number(j, "epsilon"));
    throw ConfigError("unknown family type '" + type + "'");
}

SearchRegion parse_region(const json& j) {
    SearchRegion r;
    if (j.contains("lo")) r.lo = parse_complex(j.at("lo"), "region.lo");
    if (j.contains("hi")) r.hi = parse_complex(j.at("hi"), "region.hi");
    if (j.contains("step")) r.grid_step = j.at("step").get<double>();
    if (j.contains("dedup_radius")) r.dedup_radius = j.at("dedup_radius").get<double>();
    if (!(r.grid_step > 0) || !(r.dedup_radius > 0) ||
        !(r.hi.real() > r.lo.real()) || !(r.hi.imag() > r.lo.imag()))
        throw ConfigError("invalid region (extent, step and dedup radius must be positive)");
    return r;
}

const char* kind_name(EpKind kind) {
    switch (kind) {
        case EpKind::defective: return "ep";
        case EpKind::semisimple: return "semisimple";
        case EpKind::nondiagonalizable_crossing: return "defective-crossing";
        case EpKind::unclassified: return "unclassified";
    }
    return "unclassified";
}

void append_ep_row(Table& t, const ExceptionalPoint& ep, double disc_abs) {
    t.add({ep.lambda().real(), ep.lambda().imag(), ep.energy.real(), ep.energy.imag(),
           static_cast<std::int64_t>(ep.order),
           static_cast<std::int64_t>(ep.level_indices.empty() ? -1 : ep.level_indices.front()),
           static_cast<std::int64_t>(ep.level_indices.empty() ? -1 : ep.level_indices.back()),
           ep.exponent, ep.defect_overlap, disc_abs, std::string(kind_name(ep.kind))});
}

std::vector<std::string> ep_columns() {
    return {"lambda_re", "lambda_im", "energy_re", "energy_im", "order",
            "level_low", "level_high", "exponent", "defect_overlap",
            "disc_abs", "kind"};
}

// ----------------------------------------------------------------------
// subcommand handlers

Table run_census(const json& cfg) {
    const MatrixFamily fam = parse_family(cfg.at("family"));
    const SearchRegion region =
        cfg.contains("region") ? parse_region(cfg.at("region")) : SearchRegion{};
    const auto eps = finder::census(fam, region);
    Table t;
    t.columns = ep_columns();
    for (const auto& ep : eps) {
        const double disc =
            fam.dim() <= 12 ? std::abs(char_discriminant(fam, ep.lambda())) : ep.residual;
        append_ep_row(t, ep, disc);
    }
    return t;
}

Table run_twolevel(const json& cfg) {
    if (!cfg.contains("params")) throw ConfigError("twolevel needs 'params'");
    const twolevel::TwoLevelParams p = parse_twolevel_params(cfg.at("params"));
    const auto ep = twolevel::ep_locations(p);
    const auto vecs = twolevel::ep_eigenvectors(p);

    Table t;
    t.columns = {"quantity", "value_re", "value_im"};
    auto push = [&](const std::string& name, Complex v) {
        t.add({name, v.real(), v.imag()});
    };
    push("lambda1", ep.lambda1);
    push("lambda2", ep.lambda2);
    push("energy1", ep.energy1);
    push("energy2", ep.energy2);
    const auto [ea, eb] = twolevel::energies(p, 0.0);
    push("energy_plus_at_0", ea);
    push("energy_minus_at_0", eb);
    push("right1_0", vecs.right1(0));
    push("right1_1", vecs.right1(1));
    push("right2_0", vecs.right2(0));
    push("right2_1", vecs.right2(1));
    push("left1_0", vecs.left1(0));
    push("left1_1", vecs.left1(1));
    push("left2_0", vecs.left2(0));
    push("left2_1", vecs.left2(1));
    push("selforth1", (vecs.left1.transpose() * vecs.right1)(0, 0));
    push("selforth2", (vecs.left2.transpose() * vecs.right2)(0, 0));

    for (int which : {1, 2}) {
        const auto [S, E] = twolevel::jordan_at_ep(p, which);
        Matrix J(2, 2);
        J << E, 1, 0, E;
        const Complex lam = which == 1 ? ep.lambda1 : ep.lambda2;
        const double err = (S * J * S.inverse() - p.at(lam)).norm();
        push("jordan_residual" + std::to_string(which), Complex{err, 0.0});
    }

    // resolvent residual max over a deterministic ring around the pole
    double worst = 0.0;
    for (int q = 0; q < 16; ++q) {
        const double th = 2.0 * std::numbers::pi * q / 16.0;
        const Complex E = ep.energy1 + 1.5 * Complex{std::cos(th), std::sin(th)};
        const Matrix G = twolevel::greens_2x2(p, ep.lambda1, E);
        const Matrix H = p.at(ep.lambda1);
        worst = std::max(worst,
                         ((E * Matrix::Identity(2, 2) - H) * G - Matrix::Identity(2, 2)).norm());
    }
    push("greens_ring_residual", Complex{worst, 0.0});
    return t;
}

Table run_encircle(const json& cfg) {
    const MatrixFamily fam = parse_family(cfg.at("family"));
    Table t;
    t.columns = {"orientation", "level", "loop", "factor_re", "factor_im"};
    if (cfg.contains("ep_seed")) {
        const Complex seed = parse_complex(cfg.at("ep_seed"), "ep_seed");
        const double radius = cfg.value("radius", 0.5);
        const ExceptionalPoint ep = finder::refine_ep(fam, seed);
        const auto rep = monodromy::verify_cycle(fam, ep, radius);
        for (size_t k = 0; k < rep.pair.size(); ++k) {
            for (size_t L = 0; L < rep.ccw_factors[k].size(); ++L)
                t.add({std::string("ccw"), static_cast<std::int64_t>(rep.pair[k]),
                       static_cast<std::int64_t>(L + 1), rep.ccw_factors[k][L].real(),
                       rep.ccw_factors[k][L].imag()});
            for (size_t L = 0; L < rep.cw_factors[k].size(); ++L)
                t.add({std::string("cw"), static_cast<std::int64_t>(rep.pair[k]),
                       static_cast<std::int64_t>(L + 1), rep.cw_factors[k][L].real(),
                       rep.cw_factors[k][L].imag()});
        }
        return t;
    }
    if (!cfg.contains("loop")) throw ConfigError("encircle needs 'loop' or 'ep_seed'");
    const json& lj = cfg.at("loop");
    LoopPath loop;
    loop.center = require_complex(lj, "center");
    loop.radius = require_number(lj, "radius");
    if (!(loop.radius > 0)) throw ConfigError("loop radius must be positive");
    if (lj.contains("samples")) loop.samples = static_cast<int>(lj.at("samples").get<double>());
    if (loop.samples < 16) throw ConfigError("loop samples must be at least 16");
    const std::string orient = lj.value("orientation", std::string("ccw"));
    if (orient != "ccw" && orient != "cw") throw ConfigError("orientation must be ccw|cw");
    loop.orientation = orient == "ccw" ? Orientation::ccw : Orientation::cw;

    const MonodromyResult res = monodromy::track_loop(fam, loop);
    t.columns = {"orientation", "level", "landed", "factor_re", "factor_im", "samples"};
    for (size_t k = 0; k < res.permutation.size(); ++k)
        t.add({orient, static_cast<std::int64_t>(k),
               static_cast<std::int64_t>(res.permutation[k]),
               res.end_factors(static_cast<Eigen::Index>(k)).real(),
               res.end_factors(static_cast<Eigen::Index>(k)).imag(),
               static_cast<std::int64_t>(res.samples_used)});
    return t;
}

Table run_exponents(const json& cfg) {
    const MatrixFamily fam = parse_family(cfg.at("family"));
    const Complex seed = require_complex(cfg, "seed");
    Complex dir{1.0, 0.0};
    if (cfg.contains("direction")) dir = parse_complex(cfg.at("direction"), "direction");
    const ExceptionalPoint ep = finder::refine_ep(fam, seed);
    const auto fit = monodromy::exponent_fit(fam, ep, dir);
    Table t;
    t.columns = {"lambda_re", "lambda_im", "gap_exponent", "component_exponent",
                 "gap_r2", "component_r2", "defect_overlap"};
    t.add({ep.lambda().real(), ep.lambda().imag(), fit.gap_exponent,
           fit.component_exponent, fit.gap_r2, fit.component_r2, ep.defect_overlap});
    return t;
}

Table run_response(const json& cfg) {
    const MatrixFamily fam = parse_family(cfg.at("family"));
    const Complex lambda = require_complex(cfg, "lambda");
    Table t;
    t.columns = {"kind", "x", "value"};

    if (cfg.contains("e_grid")) {
        const json& ej = cfg.at("e_grid");
        const double lo = require_number(ej, "lo");
        const double hi = require_number(ej, "hi");
        const int n = static_cast<int>(require_number(ej, "n"));
        if (n < 2 || !(hi > lo)) throw ConfigError("bad energy grid");
        const Vector in = parse_vector(cfg.at("channel_in"), "channel_in");
        const Vector out = parse_vector(cfg.at("channel_out"), "channel_out");
        const RealVector grid = RealVector::LinSpaced(n, lo, hi);
        const LineShape shape = response::cross_section(fam, lambda, in, out, grid);
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            t.add({std::string("shape"), shape.grid(i), shape.values(i)});
        const auto fit = response::lorentz_fit(shape);
        t.add({std::string("fit_center"), 0.0, fit.center});
        t.add({std::string("fit_width"), 0.0, fit.width});
        t.add({std::string("fit_amplitude"), 0.0, fit.amplitude});
        t.add({std::string("fit_residual"), 0.0, fit.residual});
    }

    if (cfg.contains("pole")) {
        const Complex seed = parse_complex(cfg.at("pole"), "pole");
        const ExceptionalPoint ep = finder::refine_ep(fam, seed);
        const auto dec = response::pole_decomposition(fam, ep);
        const Matrix alt = nilpotent_part(fam.at(ep.lambda()), ep.energy);
        t.add({std::string("pole_energy_re"), 0.0, dec.E_ep.real()});
        t.add({std::string("pole_energy_im"), 0.0, dec.E_ep.imag()});
        t.add({std::string("nilpotent_norm"), 0.0, dec.second_order.norm()});
        t.add({std::string("nilpotent_sq_norm"), 0.0,
               (dec.second_order * dec.second_order).norm()});
        t.add({std::string("nilpotent_crosscheck"), 0.0,
               (dec.second_order - alt).norm()});
        // reconstruction residual on a ring |E - E*| in [0.1, 10]
        double worst = 0.0;
        for (double r : {0.1, 1.0, 10.0})
            for (int q = 0; q < 8; ++q) {
                const Complex E =
                    dec.E_ep + r * std::exp(Complex{0.0, 2.0 * std::numbers::pi * q / 8.0});
                const Matrix G = response::greens(fam, ep.lambda(), E);
                const Matrix series =
                    dec.first_order / (E - dec.E_ep) +
                    dec.second_order / ((E - dec.E_ep) * (E - dec.E_ep));
                worst = std::max(worst, (G - series).norm());
            }
        t.add({std::string("pole_reconstruction"), 0.0, worst});
    }

    if (cfg.contains("propagate")) {
        const json& pj = cfg.at("propagate");
        const Vector psi0 = parse_vector(pj.at("psi0"), "psi0");
        if (!pj.contains("times") || !pj.at("times").is_array())
            throw ConfigError("propagate needs a 'times' array");
        const Matrix H = fam.at(lambda);
        for (const auto& tv : pj.at("times")) {
            const double time = tv.get<double>();
            const Vector psi = response::propagate(H, psi0, time);
            t.add({std::string("prop_norm"), time, psi.norm()});
        }
    }
    if (t.rows.empty())
        throw ConfigError("response config needs 'e_grid', 'pole' or 'propagate'");
    return t;
}

Table run_lipkin(const json& cfg) {
    const int N = static_cast<int>(require_number(cfg, "N"));
    const SearchRegion region =
        cfg.contains("region") ? parse_region(cfg.at("region")) : SearchRegion{};
    const auto census = models::lipkin_census(N, region);
    Table t;
    t.columns = ep_columns();
    t.columns.push_back("block");
    for (const auto& entry : census) {
        const double disc = entry.ep.residual;
        append_ep_row(t, entry.ep, disc);
        t.rows.back().push_back(
            std::string(entry.block == models::Parity::even ? "even" : "odd"));
    }
    return t;
}

Table run_metric(const json& cfg) {
    const double kappa = require_number(cfg, "kappa");
    if (!cfg.contains("gammas") || !cfg.at("gammas").is_array())
        throw ConfigError("metric needs a 'gammas' array");
    const MatrixFamily fam = models::pt_dimer(kappa);
    Table t;
    t.columns = {"gamma", "condition", "intertwining_residual", "hermiticity_residual"};
    for (const auto& gv : cfg.at("gammas")) {
        const double g = gv.get<double>();
        const Matrix H = fam.at(Complex{g, 0.0});
        const models::MetricResult res = models::quasi_metric(H);
        const Matrix hs = res.root * H * res.root.inverse();
        t.add({g, res.condition, res.intertwining_residual,
               (hs - hs.adjoint()).norm()});
    }
    return t;
}

Table run_ep3(const json& cfg) {
    if (!cfg.contains("epsilons") || !cfg.at("epsilons").is_array())
        throw ConfigError("ep3 needs an 'epsilons' array");
    Table t;
    t.columns = {"epsilon", "n_found", "lambda1_re", "lambda1_im",
                 "lambda2_re", "lambda2_im", "separation", "order"};
    if (cfg.value("certify_origin", true)) {
        const MatrixFamily fam = models::ep3_family(0.0);
        const ExceptionalPoint ep = finder::find_epn(fam, Vector::Zero(1), 3);
        t.add({0.0, static_cast<std::int64_t>(1), ep.lambda().real(), ep.lambda().imag(),
               0.0, 0.0, 0.0, static_cast<std::int64_t>(ep.order)});
    }
    for (const auto& ev : cfg.at("epsilons")) {
        const double eps = ev.get<double>();
        const auto found = models::ep3_sprout_census(eps);
        if (found.size() == 2) {
            t.add({eps, static_cast<std::int64_t>(2), found[0].lambda().real(),
                   found[0].lambda().imag(), found[1].lambda().real(),
                   found[1].lambda().imag(),
                   std::abs(found[0].lambda() - found[1].lambda()),
                   static_cast<std::int64_t>(std::max(found[0].order, found[1].order))});
        } else {
            t.add({eps, static_cast<std::int64_t>(found.size()), 0.0, 0.0, 0.0, 0.0, 0.0,
                   static_cast<std::int64_t>(0)});
        }
    }
    return t;
}

} // namespace

std::map<std::string, std::vector<std::string>> subcommand_operations() {
    return {
        {"twolevel",
         {"twolevel.ep_locations", "twolevel.energies", "twolevel.ep_eigenvectors",
          "twolevel.jordan_at_ep", "twolevel.greens_2x2"}},
        {"census",
         {"finder.scan_grid", "finder.refine_ep", "finder.classify", "finder.census",
          "linalg.eig", "linalg.char_discriminant", "models.rpa_block",
          "models.pt_dimer"}},
        {"encircle", {"monodromy.track_loop", "monodromy.verify_cycle", "finder.refine_ep"}},
        {"exponents", {"monodromy.exponent_fit", "finder.refine_ep", "finder.classify"}},
        {"response",
         {"response.greens", "response.pole_decomposition", "response.cross_section",
          "response.lorentz_fit", "response.propagate", "linalg.nilpotent_part"}},
        {"lipkin", {"models.lipkin", "models.lipkin_census", "finder.census"}},
        {"metric", {"models.pt_dimer", "models.quasi_metric", "linalg.biorthogonalize"}},
        {"ep3", {"models.ep3_family", "finder.find_epn", "finder.census"}},
    };
}

std::vector<std::string> all_operations() {
    return {
        "linalg.eig", "linalg.biorthogonalize", "linalg.nilpotent_part",
        "linalg.char_discriminant",
        "twolevel.ep_locations", "twolevel.energies", "twolevel.ep_eigenvectors",
        "twolevel.jordan_at_ep", "twolevel.greens_2x2",
        "finder.scan_grid", "finder.refine_ep", "finder.classify", "finder.census",
        "finder.find_epn",
        "monodromy.track_loop", "monodromy.verify_cycle", "monodromy.exponent_fit",
        "response.greens", "response.pole_decomposition", "response.cross_section",
        "response.lorentz_fit", "response.propagate",
        "models.lipkin", "models.lipkin_census", "models.pt_dimer",
        "models.quasi_metric", "models.rpa_block", "models.ep3_family",
    };
}

int run(int argc, char** argv) {
    CLI::App app{"Exceptional-point toolkit for parameter-dependent matrix families"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv";
    int workers = 0;

    const std::vector<std::string> names = {"twolevel", "census",    "encircle",
                                            "exponents", "response", "lipkin",
                                            "metric",    "ep3"};
    std::string chosen;
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment configuration (JSON)")
            ->required();
        sub->add_option("--out", out_path, "output path (default: stdout)");
        sub->add_option("--workers", workers, "worker thread count (0 = default)");
        sub->add_option("--format", format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->callback([&chosen, name]() { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    Table table;
    std::string raw_config;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config file '" + config_path + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        raw_config = buf.str();
        json cfg;
        try {
            cfg = json::parse(raw_config);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }

        set_workers(workers);

        if (chosen == "census") table = run_census(cfg);
        else if (chosen == "twolevel") table = run_twolevel(cfg);
        else if (chosen == "encircle") table = run_encircle(cfg);
        else if (chosen == "exponents") table = run_exponents(cfg);
        else if (chosen == "response") table = run_response(cfg);
        else if (chosen == "lipkin") table = run_lipkin(cfg);
        else if (chosen == "metric") table = run_metric(cfg);
        else if (chosen == "ep3") table = run_ep3(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: ConfigError: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: ConfigError: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    char digest[20];
    std::snprintf(digest, sizeof digest, "%016llx",
                  static_cast<unsigned long long>(fnv1a(raw_config)));

    std::ostringstream meta_csv;
    meta_csv << "epcore " << kVersion << " cmd=" << chosen << " config_digest=" << digest
             << " walltime_ms=" << ms;
    json meta_json{{"tool", "epcore"},
                   {"version", kVersion},
                   {"cmd", chosen},
                   {"config_digest", digest},
                   {"walltime_ms", ms}};

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "error: ConfigError: cannot open output path '" << out_path << "'\n";
            return 2;
        }
        os = &file;
    }
    if (format == "csv")
        write_csv(*os, table, meta_csv.str());
    else
        write_json(*os, table, meta_json);
    return 0;
}

} // namespace epcore::cli
