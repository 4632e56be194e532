#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinetik/collision.hpp"
#include "kinetik/fields.hpp"
#include "kinetik/hydro.hpp"

namespace kinetik::cli {

using json = nlohmann::json;

enum Exit : int { ok = 0, failure = 1, validation = 2, numerical = 3, unknown_subcommand = 64 };

inline constexpr int kSchemaVersion = 1;

struct Scenario {
    int schema_version = kSchemaVersion;
    CollisionModel model;
    Grid grid;
    json field;  // {"components": [...]} or {"file": "x.kfld"}
    HydroBounds bounds;
    json sections;  // kernel, ellipticity, changevar, evolve, kolmogorov, holder, bench, report
    std::string output = "kinetik_out";
    std::uint64_t seed = 1;
    std::string text;      // verbatim config bytes
    std::string base_dir;  // directory of the config file, for relative paths
    bool theta_literal_3 = false;

    json section(const std::string& name) const;
};

struct Diagnostic {
    std::string module;
    std::string message;
};

struct CostEstimate {
    std::size_t nodes = 0;
    double steps = 0.0;
    double q_evaluations = 0.0;
    double kernel_pairs = 0.0;
};

// Throws ValidationError on malformed JSON, wrong schema version or bad types.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

// Every violated precondition, tagged with the owning module. Empty when the
// scenario can be dispatched to `subcommand` (all sections when empty).
std::vector<Diagnostic> validate_scenario(const Scenario& sc, const std::string& subcommand = "");
CostEstimate estimate_cost(const Scenario& sc);

DensityField build_field(const Scenario& sc);

const std::vector<std::string>& subcommands();

// kinetik <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>] [--theta-literal-3]
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kinetik::cli
