#pragma once

#include <filesystem>
#include <vector>

namespace vadctx {

// Score-vs-label curve for one video: the smoothed score as a polyline over
// a track shaded where the ground-truth label is 1. PNG output.
void render_score_curve(const std::filesystem::path& path, const std::vector<double>& scores,
                        const std::vector<int>& labels);

} // namespace vadctx
