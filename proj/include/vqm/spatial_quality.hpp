#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqm/field.hpp"

namespace vqm {

// Per-frame spatial quality: S = (left + right) / 2.
struct SpatialScore {
    int frame_index = 0;
    double left_score = 0.0;
    double right_score = 0.0;
    double combined = 0.0;
};

double combine_spatial(double left_score, double right_score);

// Mean-subtracted contrast-normalized coefficients: (I - mu) / (sigma + 1)
// with mu, sigma from a 7x7 Gaussian-weighted window (sigma 7/6), symmetric
// border handling. Requires a frame of at least 16x16.
RealField mscn(const LumaPlane& frame);

// Same computation but also returns the local sigma field used for patch
// sharpness selection.
void mscn_with_sigma(const LumaPlane& frame, RealField& coeffs, RealField& sigma);

// 36 naturalness features: GGD (shape, variance) of the MSCN field plus
// AGGD (shape, mean, left variance, right variance) of its four pairwise
// products, at the original and half resolution. Frames must be at least
// 32x32 so the half scale stays valid. A constant frame yields a zero
// vector flagged degenerate.
struct NiqeFeatureVector {
    std::array<double, 36> v{};
    bool degenerate = false;
};
NiqeFeatureVector niqe_features(const LumaPlane& frame);

// Multivariate Gaussian summary of pristine patch statistics.
struct PristineModel {
    Eigen::VectorXd mean;        // 36
    Eigen::MatrixXd covariance;  // 36x36
    int patch_size = 96;
    double sharpness_threshold = 0.0;
    int patch_count = 0;         // sharp patches used during training
};

// Learns mean and covariance of patch-level feature vectors from sharp
// patches only (local-variance sharpness at the 75th percentile across the
// corpus). Needs at least 10 textured frames, each at least patch_size
// square.
PristineModel train_pristine(const std::vector<LumaPlane>& frames, int patch_size = 96);

// Mahalanobis-type distance between the pristine model and the frame's own
// patch statistics; lower means more natural. The blended covariance is
// regularized by 1e-6 * trace / 36 on the diagonal.
double niqe_score(const LumaPlane& frame, const PristineModel& model);

void save_pristine_model(const std::string& path, const PristineModel& model);
PristineModel load_pristine_model(const std::string& path);

// Externally computed per-frame spatial scores (alternative provider).
// File format: text lines "video_id frame_index left_score right_score".
class ExternalScores {
public:
    void add(const std::string& video_id, int frame_index, double left, double right);
    std::optional<std::pair<double, double>> get(const std::string& video_id,
                                                 int frame_index) const;
    // Throws if any of frames [0, frame_count-1) is missing for the video.
    void require_frames(const std::string& video_id, int frame_count) const;
    bool empty() const { return scores_.empty(); }

    const std::map<std::string, std::map<int, std::pair<double, double>>>& all() const {
        return scores_;
    }

private:
    std::map<std::string, std::map<int, std::pair<double, double>>> scores_;
};

ExternalScores load_external_scores(const std::string& path);
void save_external_scores(const std::string& path, const ExternalScores& scores);

} // namespace vqm
