#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "optpot/constraint.hpp"
#include "optpot/grid.hpp"
#include "optpot/optimizer.hpp"
#include "optpot/physics.hpp"

namespace optpot {

enum class PsiKind { Exp, Square };

/// Resolved experiment description. Relative file paths are already resolved
/// against the directory of the config file.
struct ExperimentConfig {
    double M = 5.0;
    int n = 100;

    PsiKind psi_kind = PsiKind::Exp;
    double m = 0.0;       // Exp
    double alpha = kDefaultAlpha;
    CapCost cap_cost = CapCost::Free;
    double budget = 0.0;  // Square

    SourceKind source = SourceKind::F1;
    std::filesystem::path source_file;  // SourceKind::Custom

    double epsilon = kDefaultEpsilon;
    double mu_max = kDefaultMuMax;
    double nu = 0.0;  // constant lower bound, unless nu_file is set
    std::filesystem::path nu_file;

    OptimizerConfig optimizer;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
};

/// Default lower bound when the config gives none: 0 for Exp, 1e-6 for Square.
inline constexpr double kDefaultSquareNu = 1e-6;

/// Reads a JSON config. Throws NotFound for a missing file and ConfigError
/// naming the line (parse errors) or the field (validation errors).
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Same, from text. `base_dir` resolves relative file paths.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text,
                                            const std::filesystem::path& base_dir = {});

/// The fully resolved config, every field explicit.
[[nodiscard]] std::string config_to_json(const ExperimentConfig& cfg);

/// Problem data of `cfg` on an arbitrary grid (used by the M sweep). Custom
/// source and nu files must match that grid.
[[nodiscard]] ProblemSetup build_problem(const ExperimentConfig& cfg, const Grid& grid);

enum class FieldFormat { Csv, Vtk };

/// CSV: header "x,y,value", one row per interior node / cell center, row-major,
/// 17 significant digits. VTK: legacy ASCII STRUCTURED_POINTS, one SCALARS array
/// named `name`. Nodal fields include the zero boundary ring, dimensions n+1;
/// cell fields are written as points at cell centers, dimensions n.
void export_field(const NodalField& field, const std::filesystem::path& path, FieldFormat format,
                  const std::string& name = "u");
void export_field(const CellField& field, const std::filesystem::path& path, FieldFormat format,
                  const std::string& name = "mu");

/// Inverse of the CSV export. Coordinates are checked against `grid`.
[[nodiscard]] NodalField import_nodal_csv(const Grid& grid, const std::filesystem::path& path);
[[nodiscard]] CellField import_cell_csv(const Grid& grid, const std::filesystem::path& path);

/// Writes manifest.json into `dir`: command, resolved config and the listed files.
void write_manifest(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const std::vector<std::string>& files);

}  // namespace optpot
