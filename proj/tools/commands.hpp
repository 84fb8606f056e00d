#pragma once

#include <map>
#include <string>

#include "lowscat/io.hpp"

namespace lowscat::cli {

// Output files by name; written only after the command succeeds.
using Outputs = std::map<std::string, std::string>;

struct Context {
    Json raw;
    std::string config_dir;  // relative paths inside the config resolve here
    std::string suite;
    int threads = 1;
};

Outputs cmd_orbit(const Context& ctx);
Outputs cmd_mixed(const Context& ctx);
Outputs cmd_phase(const Context& ctx);
Outputs cmd_classify(const Context& ctx);
Outputs cmd_probe(const Context& ctx);

/// Writes validation.json; sets `pass`.
Outputs cmd_validate(const Context& ctx, bool& pass);

/// Model with R₀/σ₀ from the config or, when absent, select_cone at the config energy.
ScatteringModel build_model(const RunConfig& cfg, Json* selection = nullptr);

}  // namespace lowscat::cli
