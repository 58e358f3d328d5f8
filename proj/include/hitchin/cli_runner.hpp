#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "hitchin/complex_field.hpp"
#include "hitchin/hitchin_solver.hpp"
#include "hitchin/verification.hpp"

namespace hitchin {

/// Flat key=value run description. Keys: n, R, grid, mode, tol, max_iter,
/// q2..qn ("re,im;re,im;..." ascending coefficients, bare "re" allowed),
/// plus optional output, dump, precondition, fallback_max_iter.
struct RunConfig {
    SolveConfig solve;
    std::string output_dir;
    bool dump_fields = true;
};

RunConfig parse_run_config(std::string_view text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_shortest(double v);

/// One CSV field dump: `# field=NAME n=.. N=.. R=..`, a column line
/// `index,x,y,re_<c>,im_<c>,...`, then one row per node in row-major order.
struct FieldTable {
    std::string name;
    int n = 0;
    HyperbolicPatch patch;
    std::vector<std::string> columns;        ///< column stems, without re_/im_
    std::vector<std::vector<cd>> values;     ///< values[column][node]
};

void write_field_csv(std::ostream& os, const FieldTable& t);
FieldTable read_field_csv(std::istream& is);

FieldTable matrix_table(const std::string& name, const MatrixField& f);
MatrixField table_to_matrix(const FieldTable& t);

/// Plain-text report with [solver], [geometry] and [checks] sections.
std::string format_checks(const std::vector<CheckResult>& checks);

/// Entry point of the command-line tool; returns the process exit code
/// (0 ok, 1 check failure, 2 usage or configuration error, 3 no convergence).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hitchin
