#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "daestab/circuit.hpp"
#include "daestab/integrate.hpp"
#include "daestab/stability.hpp"

namespace daestab {
namespace cli {

using nlohmann::json;

/// Flag overrides applied on top of the config document.
struct Overrides {
    std::optional<std::string> mode; // CLI subcommand; wins over config "mode"
    std::optional<double> t_end;
    std::optional<std::string> out_dir;
    std::optional<unsigned> seed;
};

struct RunOutcome {
    int exit_code = 0; // 0 ok, 1 error, 2 expectation/certificate regression
    std::filesystem::path out_dir;
    std::string message;
};

/// Execute a config document: decompose | simulate | check-stability |
/// check-instability | sweep. Writes output files under the configured
/// directory. Parse and model errors raise ConfigError; they are turned
/// into exit code 1 by run_file.
RunOutcome run(json config, const Overrides& overrides = {});

/// Load a config file and run it; never throws, maps errors to exit 1.
RunOutcome run_file(const std::string& path, const Overrides& overrides = {});

/// Parsed model: the DAE plus the circuit parameters when built-in.
struct Model {
    SemilinearDAE dae;
    std::optional<circuit::CircuitParams> params;
};

Model parse_model(const json& j);
circuit::CircuitParams parse_circuit_params(const json& j);
circuit::NonlinearitySpec parse_nonlinearity(const json& j);
circuit::SourceSpec parse_source(const json& j);
IntegrationOptions parse_integration(const json& j);

} // namespace cli
} // namespace daestab
