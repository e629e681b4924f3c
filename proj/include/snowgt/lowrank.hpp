#pragma once

#include "snowgt/video_tensor.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <string>
#include <vector>

namespace snowgt {

/// Thin SVD of one spatiotemporal slice (k x n): slice = left * diag(values) * right^T.
///
/// left is k x p and right is n x p with p = min(k, n). Each pair (left_l,
/// right_l) is oriented so the largest-magnitude entry of right_l is positive,
/// ties going to the lowest index. rank counts singular values above
/// max(k, n) * eps * values[0].
struct SliceSvd {
    Eigen::MatrixXd left;
    Eigen::VectorXd values;
    Eigen::MatrixXd right;
    std::size_t rank = 0;

    std::size_t frames() const { return static_cast<std::size_t>(left.rows()); }
    std::size_t width() const { return static_cast<std::size_t>(right.rows()); }
    std::size_t thin_size() const { return static_cast<std::size_t>(values.size()); }
};

/// How the foreground rank boundary q is chosen for a slice.
struct QRule {
    enum class Kind { energy, fixed };

    Kind kind = Kind::energy;
    double fraction = 0.999;     // energy: smallest q whose squared-value mass reaches this share
    std::size_t fixed_rank = 2;  // fixed: q = fixed_rank

    static QRule energy(double fraction);
    static QRule fixed(std::size_t rank);

    // "energy:0.999" or "fixed:3".
    static QRule parse(const std::string& text);
    std::string to_string() const;
};

/// Temporal pass band as fractions of Nyquist, 0 <= low <= high <= 1.
struct BandpassSpec {
    double low = 0.0;
    double high = 0.1;

    void validate() const;

    // "0.0:0.1".
    static BandpassSpec parse(const std::string& text);
    std::string to_string() const;
};

struct ComponentSplit {
    std::size_t q = 1;
    Eigen::MatrixXd background;  // rank-1 leading projection
    Eigen::MatrixXd foreground;  // projections 2..q
    Eigen::MatrixXd noise;       // projections q+1..rank
};

SliceSvd slice_svd(const Eigen::MatrixXd& slice);

/// Same as above; a numeric failure names the slice coordinates.
SliceSvd slice_svd(const SliceView& slice);

/// The single term left_l * values_l * right_l^T, 1-based l in [1, p].
Eigen::MatrixXd rank_projection(const SliceSvd& svd, std::size_t l);

/// Applies the rule and clamps to [min(2, rank), rank]; rank 1 gives q = 1.
std::size_t choose_q(const SliceSvd& svd, const QRule& rule);

ComponentSplit split_components(const SliceSvd& svd, const QRule& rule);
ComponentSplit split_components(const SliceSvd& svd, std::size_t q);

/// True when DFT bin b of a length-k signal lies inside the band, i.e.
/// low <= 2 * min(b, k - b) / k <= high.
bool bin_retained(std::size_t bin, std::size_t length, const BandpassSpec& band);

/// Ideal bandpass: zero out-of-band DFT bins and return the real inverse.
Eigen::VectorXd ideal_bandpass(const Eigen::VectorXd& signal, const BandpassSpec& band);

/// Replaces left vectors 2..q by their band-passed versions.
SliceSvd filter_left_vectors(const SliceSvd& svd, std::size_t q, const BandpassSpec& band);

/// background + filtered foreground (+ noise unless drop_noise).
Eigen::MatrixXd desnow_slice(const SliceSvd& svd, std::size_t q, const BandpassSpec& band,
                             bool drop_noise = false);

struct DesnowOptions {
    SliceMode mode = SliceMode::horizontal;
    QRule q_rule = QRule::energy(0.999);
    BandpassSpec band{};
    bool drop_noise = false;
    bool parallel = true;
};

struct DesnowDiagnostics {
    std::vector<std::string> warnings;
    std::size_t slices = 0;
    // q chosen per slice, channel-major then slice index.
    std::vector<std::size_t> q_per_slice;
};

/// Desnows every slice of the chosen mode and channel and reassembles the
/// video. Serial and parallel runs are bit-identical.
VideoTensor desnow_video(const VideoTensor& video, const DesnowOptions& options = {},
                         DesnowDiagnostics* diagnostics = nullptr);

} // namespace snowgt
