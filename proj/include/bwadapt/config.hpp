#pragma once

#include "bwadapt/engine.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace bwadapt
{
    // Parses the sectioned key-value scenario format:
    //
    //   capacity_kbps = 6000
    //   classes = voice, web            # order sets the class index
    //
    //   [class voice]
    //   bandwidth_kbps = 32
    //   gamma0 = 0
    //   gamma_decay = 0.95              # gamma_p = gamma0 * decay^p
    //   gamma_2 = 0                     # optional explicit override
    //   weight = 3
    //   mean_duration_s = 120
    //   elastic = false
    //
    //   [simulation]
    //   lambda = 0.5
    //   dwell_s = 240                   # inf disables handovers
    //   duration_s = 20000
    //   warmup_s = 2000
    //   seed = 1
    //   scheme = proposed_priority_multilevel
    //   batches = 20
    //   service = exponential           # or deterministic
    //
    // '#' starts a comment. Unknown keys and sections are errors. Parse
    // errors carry "<source>:<line>: "; semantic errors come from
    // validate_config.
    ScenarioConfig parse_config(std::string_view text, const std::string &source = "<config>");

    ScenarioConfig load_config(const std::filesystem::path &path);

    // Gamma matrix and floors, one row per class.
    std::string format_policy_table(const PolicyMatrix &matrix);
}
