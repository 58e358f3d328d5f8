#include "hitchin/cli_runner.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hitchin/errors.hpp"
#include "hitchin/harmonic_geometry.hpp"

namespace hitchin {

namespace fs = std::filesystem;

std::string format_shortest(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError(fmt::format("config key '{}': '{}' is not a number", key, text));
    return v;
}

int parse_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    int v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError(fmt::format("config key '{}': '{}' is not an integer", key, text));
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "on") return true;
    if (t == "false" || t == "0" || t == "off") return false;
    throw ConfigError(fmt::format("config key '{}': '{}' is not a boolean", key, text));
}

std::vector<cd> parse_coefficients(const std::string& key, const std::string& text) {
    std::vector<cd> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto comma = item.find(',');
        if (comma == std::string::npos) {
            out.emplace_back(parse_double(key, item), 0.0);
        } else {
            out.emplace_back(parse_double(key, item.substr(0, comma)), parse_double(key, item.substr(comma + 1)));
        }
    }
    return out;
}

std::string format_coefficients(const std::vector<cd>& c) {
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) s += ';';
        s += format_shortest(c[i].real()) + "," + format_shortest(c[i].imag());
    }
    return s;
}

std::string header_value(const std::string& line, const std::string& key) {
    const std::string tag = key + "=";
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok)
        if (tok.rfind(tag, 0) == 0) return tok.substr(tag.size());
    throw ConfigError("field dump header lacks '" + key + "'");
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key=value", lineno));
        const std::string key = trim(std::string_view(line).substr(0, eq));
        if (kv.count(key)) throw ConfigError(fmt::format("config line {}: duplicate key '{}'", lineno, key));
        kv[key] = trim(std::string_view(line).substr(eq + 1));
    }

    RunConfig cfg;
    SolveConfig& s = cfg.solve;
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const auto n_text = take("n");
    if (!n_text) throw ConfigError("config: missing required key 'n'");
    const int n = parse_int("n", *n_text);
    if (n < 2 || n > kMaxRank) throw ConfigError(fmt::format("config: n must lie in [2, {}], got {}", kMaxRank, n));
    std::vector<std::vector<cd>> polys(n - 1);
    for (int j = 2; j <= n; ++j)
        if (auto v = take("q" + std::to_string(j))) polys[j - 2] = parse_coefficients("q" + std::to_string(j), *v);
    s.q = DifferentialTuple(n, std::move(polys));

    if (auto v = take("R")) s.R = parse_double("R", *v);
    if (auto v = take("grid")) s.N = parse_int("grid", *v);
    if (auto v = take("mode")) {
        if (*v == "full")
            s.mode = SolveMode::full;
        else if (*v == "diagonal")
            s.mode = SolveMode::diagonal;
        else
            throw ConfigError("config: mode must be 'full' or 'diagonal', got '" + *v + "'");
    }
    if (auto v = take("tol")) s.tol = parse_double("tol", *v);
    if (auto v = take("max_iter")) s.max_iter = parse_int("max_iter", *v);
    if (auto v = take("fallback_max_iter")) s.fallback_max_iter = parse_int("fallback_max_iter", *v);
    if (auto v = take("precondition")) s.precondition = parse_bool("precondition", *v);
    if (auto v = take("output")) cfg.output_dir = *v;
    if (auto v = take("dump")) cfg.dump_fields = parse_bool("dump", *v);
    if (!kv.empty()) throw ConfigError("config: unknown key '" + kv.begin()->first + "'");

    if (s.mode == SolveMode::diagonal && !HitchinSystem::diagonal_compatible(s.q))
        throw ConfigError("config: diagonal mode needs a tuple with only q2 or only q" + std::to_string(n) + " nonzero");
    s.validate();
    return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
    const SolveConfig& s = cfg.solve;
    const SolveConfig defaults;
    const int n = s.q.rank();
    std::string out;
    out += fmt::format("n = {}\n", n);
    out += "R = " + format_shortest(s.R) + "\n";
    out += fmt::format("grid = {}\n", s.N);
    out += "mode = " + to_string(s.mode) + "\n";
    out += "tol = " + format_shortest(s.tol) + "\n";
    out += fmt::format("max_iter = {}\n", s.max_iter);
    for (int j = 2; j <= n; ++j) out += fmt::format("q{} = {}\n", j, format_coefficients(s.q.coefficients(j)));
    if (s.fallback_max_iter != defaults.fallback_max_iter)
        out += fmt::format("fallback_max_iter = {}\n", s.fallback_max_iter);
    if (s.precondition != defaults.precondition) out += fmt::format("precondition = {}\n", s.precondition);
    if (!cfg.output_dir.empty()) out += "output = " + cfg.output_dir + "\n";
    if (!cfg.dump_fields) out += "dump = false\n";
    return out;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

// ---------------------------------------------------------------------------

void write_field_csv(std::ostream& os, const FieldTable& t) {
    const HyperbolicPatch& p = t.patch;
    os << fmt::format("# field={} n={} N={} R={}\n", t.name, t.n, p.nodes_per_side(), format_shortest(p.half_width()));
    std::string cols = "index,x,y";
    for (const auto& c : t.columns) cols += ",re_" + c + ",im_" + c;
    os << cols << '\n';
    std::string row;
    for (int k = 0; k < p.size(); ++k) {
        row = fmt::format("{},{:.17g},{:.17g}", k, p.node(k).real(), p.node(k).imag());
        for (const auto& col : t.values) row += fmt::format(",{:.17g},{:.17g}", col[k].real(), col[k].imag());
        os << row << '\n';
    }
}

FieldTable read_field_csv(std::istream& is) {
    std::string header, columns;
    if (!std::getline(is, header) || header.rfind("#", 0) != 0) throw ConfigError("field dump: missing header line");
    FieldTable t;
    t.name = header_value(header, "field");
    t.n = parse_int("n", header_value(header, "n"));
    const int N = parse_int("N", header_value(header, "N"));
    const double R = parse_double("R", header_value(header, "R"));
    t.patch = make_patch(R, N);
    if (!std::getline(is, columns)) throw ConfigError("field dump: missing column line");
    std::vector<std::string> names;
    {
        std::stringstream ss(columns);
        std::string c;
        while (std::getline(ss, c, ',')) names.push_back(trim(c));
    }
    if (names.size() < 3 || (names.size() - 3) % 2 != 0) throw ConfigError("field dump: malformed column line");
    for (std::size_t i = 3; i < names.size(); i += 2) {
        if (names[i].rfind("re_", 0) != 0) throw ConfigError("field dump: expected re_/im_ column pairs");
        t.columns.push_back(names[i].substr(3));
    }
    t.values.assign(t.columns.size(), std::vector<cd>(t.patch.size()));
    std::string line;
    for (int k = 0; k < t.patch.size(); ++k) {
        if (!std::getline(is, line)) throw ConfigError(fmt::format("field dump: expected {} rows", t.patch.size()));
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != names.size()) throw ConfigError(fmt::format("field dump: row {} has wrong width", k));
        if (parse_int("index", cells[0]) != k) throw ConfigError(fmt::format("field dump: row {} out of order", k));
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            t.values[c][k] = cd(parse_double("re", cells[3 + 2 * c]), parse_double("im", cells[4 + 2 * c]));
    }
    return t;
}

FieldTable matrix_table(const std::string& name, const MatrixField& f) {
    FieldTable t;
    t.name = name;
    t.n = f.rank();
    t.patch = f.patch();
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.n; ++j) {
            t.columns.push_back(fmt::format("{}{}", i, j));
            t.values.push_back(f.entry(i, j).values);
        }
    return t;
}

MatrixField table_to_matrix(const FieldTable& t) {
    if (t.columns.size() != static_cast<std::size_t>(t.n) * t.n)
        throw ConfigError("field dump '" + t.name + "' does not hold an n x n matrix field");
    MatrixField f(t.patch, t.n);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.n; ++j) {
            const auto& col = t.values[static_cast<std::size_t>(i) * t.n + j];
            for (int k = 0; k < f.size(); ++k) f.at(k)(i, j) = col[k];
        }
    return f;
}

std::string format_checks(const std::vector<CheckResult>& checks) {
    std::size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    std::string out;
    for (const auto& c : checks) {
        out += fmt::format("{} {:<{}} measured={:.6e} tol={:.1e} samples={}", c.pass ? "PASS" : "FAIL", c.name, width,
                           c.measured, c.tolerance, c.samples);
        if (!c.detail.empty()) out += " (" + c.detail + ")";
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string solver_section(const SolveConfig& cfg, const SolveReport& rep) {
    std::string s = "[solver]\n";
    s += fmt::format("mode = {}\nn = {}\ngrid = {}\nR = {}\n", to_string(cfg.mode), cfg.q.rank(), cfg.N,
                     format_shortest(cfg.R));
    s += fmt::format("termination = {}\n", to_string(rep.termination));
    if (!rep.message.empty()) s += "message = " + rep.message + "\n";
    s += fmt::format("newton_iterations = {}\nfallback_iterations = {}\nresidual_evaluations = {}\n",
                     rep.newton_iterations, rep.fallback_iterations, rep.residual_evaluations);
    s += fmt::format("final_residual = {:.6e}\n", rep.final_residual());
    s += "residual_history =";
    const std::size_t shown = std::min<std::size_t>(rep.residual_history.size(), 64);
    for (std::size_t i = 0; i < shown; ++i) s += fmt::format(" {:.3e}", rep.residual_history[i]);
    if (shown < rep.residual_history.size()) s += fmt::format(" ... {:.3e}", rep.residual_history.back());
    s += '\n';
    double tr = 0, he = 0, det = 0;
    for (const auto& it : rep.iterates) {
        tr = std::max(tr, it.trace_defect);
        he = std::max(he, it.hermitian_defect);
        det = std::max(det, it.max_det_error);
    }
    s += fmt::format("max_trace_defect = {:.3e}\nmax_hermitian_defect = {:.3e}\nmax_det_error = {:.3e}\n", tr, he, det);
    s += fmt::format("wall_seconds = {:.3f}\n", rep.wall_seconds);
    return s;
}

std::string geometry_section(const GeometryReport& g, const SolutionChecks* checks) {
    std::string s = "[geometry]\n";
    s += fmt::format("energy_min = {:.10f}\nenergy_max = {:.10f}\ninterior_energy_min = {:.10f}\n", g.energy_min,
                     g.energy_max, g.interior_energy_min);
    s += fmt::format("energy_integral = {:.10e}\nhopf_dbar_sup = {:.3e}\n", g.energy_integral, g.hopf_dbar_sup);
    if (checks)
        s += fmt::format("interior_energy_margin = {:.6e}\ninterior_v_margin = {:.6e}\n", checks->energy_margin,
                         checks->v_margin);
    return s;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    os << text;
}

void write_table(const fs::path& p, const FieldTable& t) {
    std::ofstream os(p);
    if (!os) throw ConfigError("cannot write " + p.string());
    write_field_csv(os, t);
}

FieldTable real_table(const std::string& name, int n, const std::vector<RealField>& fields, const std::string& stem) {
    FieldTable t;
    t.name = name;
    t.n = n;
    t.patch = fields.front().patch;
    for (std::size_t l = 0; l < fields.size(); ++l) {
        t.columns.push_back(fmt::format("{}{}", stem, l + 1));
        std::vector<cd> col(fields[l].values.begin(), fields[l].values.end());
        t.values.push_back(std::move(col));
    }
    return t;
}

void dump_state(const fs::path& dir, const RunConfig& cfg, const MetricState& state, const MatrixField& H,
                const GeometryReport* geo, const SplittingData* split) {
    fs::create_directories(dir);
    write_text(dir / "config.txt", serialize_run_config(cfg));
    if (!cfg.dump_fields) return;
    write_table(dir / "S.csv", matrix_table("S", state.S));
    write_table(dir / "H.csv", matrix_table("H", H));
    const int n = state.baseline.n;
    if (geo) {
        write_table(dir / "e.csv", real_table("e", n, {geo->energy}, "e"));
        FieldTable hopf;
        hopf.name = "hopf";
        hopf.n = n;
        hopf.patch = geo->hopf.patch;
        hopf.columns = {"hopf"};
        hopf.values = {geo->hopf.values};
        write_table(dir / "hopf.csv", hopf);
    }
    if (split) write_table(dir / "v.csv", real_table("v", n, split->v, "v"));
}

struct Outcome {
    std::string report;
    int code = 0;
};

// Geometry plus the check battery on a converged state.
Outcome analyse(const RunConfig& cfg, const MetricState& state, const SolveReport& rep, const fs::path& dump_dir) {
    Outcome o;
    const HyperbolicPatch& patch = state.baseline.patch;
    const MatrixField phi = assemble_phi(cfg.solve.q, patch);
    const MatrixField H = state.metric();
    o.report = solver_section(cfg.solve, rep);
    if (!rep.converged()) {
        o.code = 3;
        if (!dump_dir.empty()) {
            dump_state(dump_dir, cfg, state, H, nullptr, nullptr);
            write_text(dump_dir / "report.txt", o.report);
        }
        return o;
    }
    const GeometryReport geo = pullback_and_hopf(phi, H, patch);
    const SplittingData split = splitting_metrics(H);
    SolutionCheckOptions opt;
    opt.residual_tol = cfg.solve.tol;
    const SolutionChecks checks = check_solution(state, cfg.solve.q, rep, opt);
    o.report += "\n" + geometry_section(geo, &checks);
    o.report += "\n[checks]\n" + format_checks(checks.checks);
    o.code = checks.all_pass() ? 0 : 1;
    if (!dump_dir.empty()) {
        dump_state(dump_dir, cfg, state, H, &geo, &split);
        write_text(dump_dir / "report.txt", o.report);
    }
    return o;
}

int cmd_solve(const std::string& config_path, std::optional<double> tol, std::optional<int> max_iter,
              const std::string& output, std::ostream& out) {
    RunConfig cfg = load_run_config(config_path);
    if (tol) cfg.solve.tol = *tol;
    if (max_iter) cfg.solve.max_iter = *max_iter;
    if (!output.empty()) cfg.output_dir = output;
    cfg.solve.validate();
    const SolveResult res = solve(cfg.solve);
    const Outcome o = analyse(cfg, res.state, res.report, cfg.output_dir);
    out << o.report;
    return o.code;
}

int cmd_baseline(int n, double R, int grid, const std::string& output, std::ostream& out) {
    RunConfig cfg;
    cfg.solve.q = DifferentialTuple::zero(n);
    cfg.solve.R = R;
    cfg.solve.N = grid;
    cfg.solve.validate();
    const HyperbolicPatch patch = make_patch(R, grid);
    MetricState state{fuchsian_baseline(n, patch), MatrixField(patch, n)};
    const HitchinSystem sys(assemble_phi(cfg.solve.q, patch), state.baseline);
    SolveReport rep;
    rep.residual_history.push_back(residual_sup_norm(sys, state.S));
    rep.termination = rep.final_residual() < cfg.solve.tol ? Termination::converged : Termination::max_iterations;
    rep.message = "analytic Fuchsian solution, no iterations";
    const Outcome o = analyse(cfg, state, rep, output);
    out << o.report;
    if (o.code == 0) {
        const GeometryReport geo = pullback_and_hopf(assemble_phi(cfg.solve.q, patch), state.metric(), patch);
        out << fmt::format("\ne(f) min = {:.6f} max = {:.6f}\n", geo.energy_min, geo.energy_max);
    }
    return o.code;
}

int cmd_identities(int n_max, int samples, std::ostream& out) {
    if (n_max < 2 || n_max > 20) throw ConfigError("identities: --n-max must lie in [2, 20]");
    if (samples < 1) throw ConfigError("identities: --samples must be positive");
    std::vector<CheckResult> checks = check_identities(n_max, samples);
    for (int n = 2; n <= std::min(n_max, kMaxRank); ++n) checks.push_back(check_fibration_roundtrip(n, samples));
    for (int n = 2; n <= n_max; ++n) checks.push_back(check_amgm_chain(n, 10 * samples));
    out << "[checks]\n" << format_checks(checks);
    const bool ok = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    return ok ? 0 : 1;
}

int cmd_verify(const fs::path& dir, std::ostream& out) {
    RunConfig cfg = load_run_config(dir / "config.txt");
    std::ifstream in(dir / "S.csv");
    if (!in) throw ConfigError("cannot read " + (dir / "S.csv").string());
    const MatrixField S = table_to_matrix(read_field_csv(in));
    const SolveConfig& sc = cfg.solve;
    if (S.rank() != sc.q.rank() || S.patch().nodes_per_side() != sc.N || S.patch().half_width() != sc.R)
        throw ConfigError("S.csv does not match config.txt");
    const HyperbolicPatch patch = make_patch(sc.R, sc.N);
    MatrixField S2(patch, S.rank());
    S2.raw() = S.raw();
    MetricState state{fuchsian_baseline(sc.q.rank(), patch), std::move(S2)};
    const HitchinSystem sys(assemble_phi(sc.q, patch), state.baseline);
    SolveReport rep;
    rep.residual_history.push_back(residual_sup_norm(sys, state.S));
    rep.termination = rep.final_residual() < sc.tol ? Termination::converged : Termination::max_iterations;
    rep.message = "recomputed from dumped fields";
    const Outcome o = analyse(cfg, state, rep, {});
    out << o.report;
    return o.code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Harmonic metrics of Hitchin-section Higgs bundles on a hyperbolic patch"};
    app.require_subcommand(1);

    auto* solve_cmd = app.add_subcommand("solve", "solve, analyse and dump one configuration");
    std::string config_path, output;
    std::optional<double> tol;
    std::optional<int> max_iter;
    solve_cmd->add_option("--config", config_path, "key=value configuration file")->required();
    solve_cmd->add_option("--tol", tol, "residual sup-norm target");
    solve_cmd->add_option("--max-iter", max_iter, "Newton iteration limit");
    solve_cmd->add_option("--output", output, "directory for dumps and report");

    auto* base_cmd = app.add_subcommand("baseline", "check the Fuchsian solution");
    int n = 3, grid = 64;
    double R = 0.5;
    std::string base_output;
    base_cmd->add_option("--n", n, "rank")->required();
    base_cmd->add_option("--R", R, "patch half-width");
    base_cmd->add_option("--grid", grid, "nodes per side");
    base_cmd->add_option("--output", base_output, "directory for dumps and report");

    auto* id_cmd = app.add_subcommand("identities", "algebraic identity suite");
    int n_max = 10, samples = 1000;
    id_cmd->add_option("--n-max", n_max, "largest rank");
    id_cmd->add_option("--samples", samples, "random samples per case");

    auto* verify_cmd = app.add_subcommand("verify", "re-run the checks on a dump directory");
    std::string input;
    verify_cmd->add_option("--input", input, "dump directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << e.what() << '\n';
        return 2;
    }

    try {
        if (*solve_cmd) return cmd_solve(config_path, tol, max_iter, output, out);
        if (*base_cmd) return cmd_baseline(n, R, grid, base_output, out);
        if (*id_cmd) return cmd_identities(n_max, samples, out);
        if (*verify_cmd) return cmd_verify(input, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const InvalidRankError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const AnsatzError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace hitchin
