#pragma once

#include <array>
#include <string>
#include <string_view>

#include "gscale/baselines.hpp"
#include "gscale/io.hpp"
#include "gscale/pose_prior.hpp"
#include "gscale/solver.hpp"

namespace gscale {

inline constexpr std::array<std::string_view, 3> kMethods{"scalenet", "pgm", "pgm-fixed"};

bool is_method(std::string_view name);
/// "scalenet, pgm, pgm-fixed".
std::string method_list();

struct ToolkitConfig {
  std::string method{"scalenet"};
  PriorTable priors;
  RefinementConfig solver;
  PgmOptions pgm;
  FilterThresholds filter;
  OverlayOptions overlay;
};

/// Reads a TOML file. Every key is optional and overrides its default;
/// unknown sections and keys are rejected. Errors are InputError with the
/// dotted key in the message.
///
///   method = "scalenet"
///   [prior.person]   mu, sigma       (also prior.car, prior.other)
///   [solver]         RefinementConfig fields, prior_mode = "log_density"
///   [pgm]            PgmOptions fields
///   [filter]         FilterThresholds fields
///   [overlay]        reference_height_m, reference_width_m
ToolkitConfig parse_config(std::string_view toml_text);

/// Canonical TOML listing every setting; parse_config(dump_config(c))
/// reproduces c.
std::string dump_config(const ToolkitConfig& config);

/// fnv1a64 tag of dump_config.
std::string config_hash(const ToolkitConfig& config);

}  // namespace gscale
