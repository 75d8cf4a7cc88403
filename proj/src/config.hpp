#ifndef AUSCULT_CONFIG_HPP
#define AUSCULT_CONFIG_HPP

#include <filesystem>
#include <string>

#include "augment.hpp"
#include "ddpm.hpp"

namespace auscult {

// Tool configuration, loaded from versioned JSON.  Unknown keys anywhere in
// the document are rejected so typos fail loudly instead of silently using
// defaults.
struct ToolConfig {
    int version = 1;
    AugmentConfig augment;
    TrainConfig train;
    bool sample_stochastic = true;
};

ToolConfig default_config();
ToolConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ToolConfig& cfg); // pretty-printed, round-trips

const char* stretch_mode_name(StretchMode m);
StretchMode parse_stretch_mode(const std::string& name);

} // namespace auscult

#endif
