#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gscale/config.hpp"
#include "gscale/io.hpp"
#include "gscale/scene.hpp"

namespace gscale {

/// Filters the document's detections, runs config.method on the survivors
/// and reports every index against the document: object_indices and
/// excluded refer to doc.detections, with filter rejections listed among
/// the exclusions.
SceneEstimate solve_document(const DetectionDocument& doc, const ToolkitConfig& config);

/// Per estimated object, the upright ratio of its document detection
/// (1 for boxes without usable keypoints).
std::vector<double> document_upright_ratios(const DetectionDocument& doc,
                                            const SceneEstimate& estimate,
                                            double head_extension = kDefaultHeadExtension);

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file. Throws InputError when the file cannot be written.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
/// Throws InputError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Command-line entry point. `args` excludes the program name. Machine
/// output goes to `out` (or files), diagnostics to `err`.
/// Returns 0 on success, 1 on input or usage errors, 2 on internal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gscale
