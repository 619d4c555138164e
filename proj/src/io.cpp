#include "optpot/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "optpot/errors.hpp"

namespace optpot {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw ConfigError("config: " + field + ": " + why);
}

void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) bad_field(where.empty() ? key : where + "." + key, "unknown key");
    }
}

double get_number(const Json& obj, const char* key, const std::string& field, double fallback) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number()) bad_field(field, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad_field(field, "must be finite");
    return x;
}

long long get_integer(const Json& obj, const char* key, const std::string& field, long long fallback) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long long>(x);
    }
    bad_field(field, "expected an integer");
}

std::string get_string(const Json& obj, const char* key, const std::string& field, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_string()) bad_field(field, "expected a string");
    return v.get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path;
}

// Either "name", or {"file": "path"}.
std::filesystem::path file_ref(const Json& v, const std::string& field, const std::filesystem::path& base) {
    reject_unknown(v, field, {"file"});
    if (!v.contains("file") || !v.at("file").is_string()) bad_field(field + ".file", "expected a path string");
    return resolve(base, v.at("file").get<std::string>());
}

void parse_psi(const Json& psi, ExperimentConfig& cfg) {
    if (!psi.is_object()) bad_field("psi", "expected an object");
    reject_unknown(psi, "psi", {"kind", "m", "alpha", "cap_cost", "budget"});
    const std::string kind = get_string(psi, "kind", "psi.kind", "");
    if (kind == "exp") {
        cfg.psi_kind = PsiKind::Exp;
        if (!psi.contains("m")) bad_field("psi.m", "required for kind exp");
        cfg.m = get_number(psi, "m", "psi.m", 0.0);
        cfg.alpha = get_number(psi, "alpha", "psi.alpha", kDefaultAlpha);
        const std::string cap = get_string(psi, "cap_cost", "psi.cap_cost", "free");
        if (cap == "free") {
            cfg.cap_cost = CapCost::Free;
        } else if (cap == "charged") {
            cfg.cap_cost = CapCost::Charged;
        } else {
            bad_field("psi.cap_cost", "expected 'free' or 'charged', got '" + cap + "'");
        }
        if (psi.contains("budget")) bad_field("psi.budget", "only valid for kind square");
        if (!(cfg.m > 0.0)) bad_field("psi.m", "must be positive");
        if (!(cfg.alpha > 0.0)) bad_field("psi.alpha", "must be positive");
    } else if (kind == "square") {
        cfg.psi_kind = PsiKind::Square;
        if (!psi.contains("budget")) bad_field("psi.budget", "required for kind square");
        cfg.budget = get_number(psi, "budget", "psi.budget", 0.0);
        for (const char* k : {"m", "alpha", "cap_cost"}) {
            if (psi.contains(k)) bad_field(std::string("psi.") + k, "only valid for kind exp");
        }
        if (!(cfg.budget > 0.0)) bad_field("psi.budget", "must be positive");
    } else {
        bad_field("psi.kind", "expected 'exp' or 'square', got '" + kind + "'");
    }
}

void parse_optimizer(const Json& opt, OptimizerConfig& o) {
    if (!opt.is_object()) bad_field("optimizer", "expected an object");
    reject_unknown(opt, "optimizer",
                   {"strategy", "max_iters", "initial_step", "backtrack", "armijo", "max_backtracks", "step_tol",
                    "cost_tol", "solver_tol", "mma_asymptote", "mma_move"});
    if (opt.contains("strategy")) {
        try {
            o.strategy = parse_strategy(get_string(opt, "strategy", "optimizer.strategy", ""));
        } catch (const InvalidArgument& e) {
            bad_field("optimizer.strategy", e.what());
        }
    }
    o.max_iters = static_cast<int>(get_integer(opt, "max_iters", "optimizer.max_iters", o.max_iters));
    o.max_backtracks =
        static_cast<int>(get_integer(opt, "max_backtracks", "optimizer.max_backtracks", o.max_backtracks));
    o.initial_step = get_number(opt, "initial_step", "optimizer.initial_step", o.initial_step);
    o.backtrack = get_number(opt, "backtrack", "optimizer.backtrack", o.backtrack);
    o.armijo = get_number(opt, "armijo", "optimizer.armijo", o.armijo);
    o.step_tol = get_number(opt, "step_tol", "optimizer.step_tol", o.step_tol);
    o.cost_tol = get_number(opt, "cost_tol", "optimizer.cost_tol", o.cost_tol);
    o.solver_tol = get_number(opt, "solver_tol", "optimizer.solver_tol", o.solver_tol);
    o.mma_asymptote = get_number(opt, "mma_asymptote", "optimizer.mma_asymptote", o.mma_asymptote);
    o.mma_move = get_number(opt, "mma_move", "optimizer.mma_move", o.mma_move);
    try {
        o.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<double>& xs, const std::vector<double>& ys,
               std::span<const double> values) {
    auto out = open_out(path);
    out << "x,y,value\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        out << fmt17(xs[k]) << ',' << fmt17(ys[k]) << ',' << fmt17(values[k]) << '\n';
    }
    finish(out, path);
}

void write_vtk(const std::filesystem::path& path, const std::string& name, int dim, double origin, double h,
               const std::vector<double>& values) {
    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\n"
        << name << "\nASCII\nDATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << dim << ' ' << dim << " 1\n"
        << "ORIGIN " << fmt17(origin) << ' ' << fmt17(origin) << " 0\n"
        << "SPACING " << fmt17(h) << ' ' << fmt17(h) << " 1\n"
        << "POINT_DATA " << values.size() << '\n'
        << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) out << fmt17(v) << '\n';
    finish(out, path);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    }
    return v;
}

std::vector<double> read_csv(const std::filesystem::path& path, const std::vector<double>& xs,
                             const std::vector<double>& ys, double coord_tol) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "x,y,value") {
        throw IoError(path.string() + ":1: expected header 'x,y,value'");
    }
    std::vector<double> values;
    values.reserve(xs.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        if (cols.size() != 3) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 3 columns");
        const std::size_t k = values.size();
        if (k >= xs.size()) throw IoError(path.string() + ": more rows than the grid has points");
        const double x = parse_double(cols[0], path, lineno);
        const double y = parse_double(cols[1], path, lineno);
        if (std::abs(x - xs[k]) > coord_tol || std::abs(y - ys[k]) > coord_tol) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": coordinates do not match the grid");
        }
        values.push_back(parse_double(cols[2], path, lineno));
    }
    if (values.size() != xs.size()) {
        throw IoError(path.string() + ": expected " + std::to_string(xs.size()) + " rows, got " +
                      std::to_string(values.size()));
    }
    return values;
}

void node_coords(const Grid& grid, std::vector<double>& xs, std::vector<double>& ys) {
    const int n = grid.cells_per_side();
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            xs.push_back(grid.node_coord(i));
            ys.push_back(grid.node_coord(j));
        }
    }
}

void cell_coords(const Grid& grid, std::vector<double>& xs, std::vector<double>& ys) {
    const int n = grid.cells_per_side();
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            xs.push_back(grid.cell_center(i));
            ys.push_back(grid.cell_center(j));
        }
    }
}

double coord_tolerance(const Grid& grid) { return 1e-9 * std::max(1.0, grid.half_width()); }

const char* to_key(SourceKind k) {
    switch (k) {
        case SourceKind::F1: return "f1";
        case SourceKind::F2: return "f2";
        case SourceKind::Custom: return "file";
    }
    return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(doc, "",
                   {"M", "n", "psi", "source", "epsilon", "mu_max", "nu", "optimizer", "output_dir", "seed"});

    ExperimentConfig cfg;
    cfg.M = get_number(doc, "M", "M", cfg.M);
    const long long n = get_integer(doc, "n", "n", cfg.n);
    if (!(cfg.M > 0.0)) bad_field("M", "must be positive");
    if (n < 2 || n > 1 << 20) bad_field("n", "must be at least 2, got " + std::to_string(n));
    if (n % 2 != 0) bad_field("n", "must be even, got " + std::to_string(n));
    cfg.n = static_cast<int>(n);

    if (!doc.contains("psi")) bad_field("psi", "required");
    parse_psi(doc.at("psi"), cfg);

    if (doc.contains("source")) {
        const Json& s = doc.at("source");
        if (s.is_string()) {
            const std::string name = s.get<std::string>();
            if (name == "f1") {
                cfg.source = SourceKind::F1;
            } else if (name == "f2") {
                cfg.source = SourceKind::F2;
            } else {
                bad_field("source", "expected 'f1', 'f2' or {\"file\": ...}, got '" + name + "'");
            }
        } else if (s.is_object()) {
            cfg.source = SourceKind::Custom;
            cfg.source_file = file_ref(s, "source", base_dir);
        } else {
            bad_field("source", "expected a preset name or {\"file\": ...}");
        }
    }

    cfg.epsilon = get_number(doc, "epsilon", "epsilon", cfg.epsilon);
    cfg.mu_max = get_number(doc, "mu_max", "mu_max", cfg.mu_max);
    if (cfg.epsilon < 0.0) bad_field("epsilon", "must be >= 0");
    if (!(cfg.mu_max > 0.0)) bad_field("mu_max", "must be positive");

    cfg.nu = cfg.psi_kind == PsiKind::Square ? kDefaultSquareNu : 0.0;
    if (doc.contains("nu")) {
        const Json& v = doc.at("nu");
        if (v.is_object()) {
            cfg.nu_file = file_ref(v, "nu", base_dir);
        } else {
            cfg.nu = get_number(doc, "nu", "nu", 0.0);
            if (cfg.nu < 0.0 || cfg.nu > cfg.mu_max) bad_field("nu", "must lie in [0, mu_max]");
        }
    }
    if (cfg.psi_kind == PsiKind::Square && cfg.nu_file.empty() && !(cfg.nu > 0.0)) {
        bad_field("nu", "square budget needs a positive lower bound");
    }

    if (doc.contains("optimizer")) parse_optimizer(doc.at("optimizer"), cfg.optimizer);
    if (doc.contains("output_dir")) cfg.output_dir = resolve(base_dir, get_string(doc, "output_dir", "output_dir", ""));
    const long long seed = get_integer(doc, "seed", "seed", 0);
    if (seed < 0) bad_field("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("config file not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    OrderedJson j;
    j["M"] = cfg.M;
    j["n"] = cfg.n;
    OrderedJson psi;
    if (cfg.psi_kind == PsiKind::Exp) {
        psi["kind"] = "exp";
        psi["m"] = cfg.m;
        psi["alpha"] = cfg.alpha;
        psi["cap_cost"] = cfg.cap_cost == CapCost::Free ? "free" : "charged";
    } else {
        psi["kind"] = "square";
        psi["budget"] = cfg.budget;
    }
    j["psi"] = psi;
    if (cfg.source == SourceKind::Custom) {
        j["source"] = OrderedJson{{"file", cfg.source_file.string()}};
    } else {
        j["source"] = to_key(cfg.source);
    }
    j["epsilon"] = cfg.epsilon;
    j["mu_max"] = cfg.mu_max;
    if (cfg.nu_file.empty()) {
        j["nu"] = cfg.nu;
    } else {
        j["nu"] = OrderedJson{{"file", cfg.nu_file.string()}};
    }
    const OptimizerConfig& o = cfg.optimizer;
    j["optimizer"] = OrderedJson{{"strategy", to_string(o.strategy)},
                                 {"max_iters", o.max_iters},
                                 {"initial_step", o.initial_step},
                                 {"backtrack", o.backtrack},
                                 {"armijo", o.armijo},
                                 {"max_backtracks", o.max_backtracks},
                                 {"step_tol", o.step_tol},
                                 {"cost_tol", o.cost_tol},
                                 {"solver_tol", o.solver_tol},
                                 {"mma_asymptote", o.mma_asymptote},
                                 {"mma_move", o.mma_move}};
    j["output_dir"] = cfg.output_dir.string();
    j["seed"] = cfg.seed;
    return j.dump(2);
}

ProblemSetup build_problem(const ExperimentConfig& cfg, const Grid& grid) {
    CellField nu = cfg.nu_file.empty() ? constant_cells(grid, cfg.nu) : import_cell_csv(grid, cfg.nu_file);
    PsiSpec spec = cfg.psi_kind == PsiKind::Exp
                       ? PsiSpec::exponential(cfg.m, cfg.alpha, cfg.mu_max, std::move(nu), cfg.cap_cost)
                       : PsiSpec::square(cfg.budget, cfg.mu_max, std::move(nu));
    SourcePreset preset{cfg.source, std::nullopt};
    if (cfg.source == SourceKind::Custom) preset.custom = import_nodal_csv(grid, cfg.source_file);
    NodalField f = sample_source(grid, preset, cfg.epsilon);
    NodalField g = sample_weight(grid, cfg.epsilon);
    return ProblemSetup{std::move(spec), std::move(f), std::move(g)};
}

void export_field(const NodalField& field, const std::filesystem::path& path, FieldFormat format,
                  const std::string& name) {
    const Grid& grid = field.grid();
    if (format == FieldFormat::Csv) {
        std::vector<double> xs, ys;
        node_coords(grid, xs, ys);
        write_csv(path, xs, ys, field.values());
        return;
    }
    const int n = grid.cells_per_side();
    std::vector<double> all;
    all.reserve(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) all.push_back(node_value(field, i, j));
    }
    write_vtk(path, name, n + 1, -grid.half_width(), grid.h(), all);
}

void export_field(const CellField& field, const std::filesystem::path& path, FieldFormat format,
                  const std::string& name) {
    const Grid& grid = field.grid();
    if (format == FieldFormat::Csv) {
        std::vector<double> xs, ys;
        cell_coords(grid, xs, ys);
        write_csv(path, xs, ys, field.values());
        return;
    }
    write_vtk(path, name, grid.cells_per_side(), grid.cell_center(0), grid.h(), field.to_vector());
}

NodalField import_nodal_csv(const Grid& grid, const std::filesystem::path& path) {
    std::vector<double> xs, ys;
    node_coords(grid, xs, ys);
    return NodalField(grid, read_csv(path, xs, ys, coord_tolerance(grid)));
}

CellField import_cell_csv(const Grid& grid, const std::filesystem::path& path) {
    std::vector<double> xs, ys;
    cell_coords(grid, xs, ys);
    return CellField(grid, read_csv(path, xs, ys, coord_tolerance(grid)));
}

void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const std::vector<std::string>& files) {
    OrderedJson m;
    m["command"] = command;
    m["config"] = OrderedJson::parse(config_to_json(cfg));
    m["files"] = files;
    const auto path = dir / "manifest.json";
    auto out = open_out(path);
    out << m.dump(2) << '\n';
    finish(out, path);
}

}  // namespace optpot
