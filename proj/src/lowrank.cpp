#include "snowgt/lowrank.hpp"

#include "snowgt/errors.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>
#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <limits>

namespace snowgt {

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

double parse_number(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw ParameterError("invalid " + what + " '" + text + "'");
    }
    return v;
}

} // namespace

QRule QRule::energy(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ParameterError("energy fraction must lie in (0, 1]");
    }
    QRule rule;
    rule.kind = Kind::energy;
    rule.fraction = fraction;
    return rule;
}

QRule QRule::fixed(std::size_t rank) {
    if (rank < 1) {
        throw ParameterError("fixed rank must be at least 1");
    }
    QRule rule;
    rule.kind = Kind::fixed;
    rule.fixed_rank = rank;
    return rule;
}

QRule QRule::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ParameterError("q rule must look like energy:F or fixed:R, got '" + text + "'");
    }
    const std::string kind = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    if (kind == "energy") {
        return energy(parse_number(arg, "energy fraction"));
    }
    if (kind == "fixed") {
        const double r = parse_number(arg, "fixed rank");
        if (r < 1.0 || r != std::floor(r)) {
            throw ParameterError("fixed rank must be a positive integer, got '" + arg + "'");
        }
        return fixed(static_cast<std::size_t>(r));
    }
    throw ParameterError("unknown q rule '" + kind + "'");
}

std::string QRule::to_string() const {
    if (kind == Kind::energy) {
        return "energy:" + format_number(fraction);
    }
    return "fixed:" + std::to_string(fixed_rank);
}

void BandpassSpec::validate() const {
    if (!(low >= 0.0 && low <= high && high <= 1.0)) {
        throw ParameterError("band must satisfy 0 <= low <= high <= 1, got " + to_string());
    }
}

BandpassSpec BandpassSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw ParameterError("band must look like LOW:HIGH, got '" + text + "'");
    }
    BandpassSpec band{parse_number(text.substr(0, colon), "band low cutoff"),
                      parse_number(text.substr(colon + 1), "band high cutoff")};
    band.validate();
    return band;
}

std::string BandpassSpec::to_string() const {
    return format_number(low) + ":" + format_number(high);
}

SliceSvd slice_svd(const Eigen::MatrixXd& slice) {
    if (slice.size() == 0) {
        throw NumericFailure("cannot decompose an empty slice");
    }
    if (!slice.allFinite()) {
        throw NumericFailure("slice contains non-finite values");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(slice, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericFailure("SVD did not converge");
    }

    SliceSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV(), 0};
    for (Eigen::Index l = 0; l < out.values.size(); ++l) {
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < out.right.rows(); ++i) {
            const double mag = std::abs(out.right(i, l));
            if (mag > best) {
                best = mag;
                pivot = i;
            }
        }
        if (out.right(pivot, l) < 0.0) {
            out.right.col(l) *= -1.0;
            out.left.col(l) *= -1.0;
        }
    }

    const double top = out.values.size() > 0 ? out.values(0) : 0.0;
    const double cutoff =
        static_cast<double>(std::max(slice.rows(), slice.cols())) * std::numeric_limits<double>::epsilon() * top;
    for (Eigen::Index l = 0; l < out.values.size(); ++l) {
        if (out.values(l) > cutoff) {
            ++out.rank;
        }
    }
    return out;
}

SliceSvd slice_svd(const SliceView& slice) {
    try {
        return slice_svd(slice.matrix);
    } catch (const NumericFailure& e) {
        throw NumericFailure(std::string(e.what()) + " (" + std::string(to_string(slice.mode)) + " slice " +
                             std::to_string(slice.index) + ", channel " + std::to_string(slice.channel) + ")");
    }
}

Eigen::MatrixXd rank_projection(const SliceSvd& svd, std::size_t l) {
    if (l < 1 || l > svd.thin_size()) {
        throw BoundsError("projection index " + std::to_string(l) + " outside [1, " +
                          std::to_string(svd.thin_size()) + "]");
    }
    const auto col = static_cast<Eigen::Index>(l - 1);
    return svd.left.col(col) * svd.values(col) * svd.right.col(col).transpose();
}

std::size_t choose_q(const SliceSvd& svd, const QRule& rule) {
    const std::size_t d = svd.rank;
    if (d <= 1) {
        return d;
    }
    std::size_t q = d;
    if (rule.kind == QRule::Kind::fixed) {
        q = std::min(rule.fixed_rank, d);
    } else {
        double total = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            total += svd.values(static_cast<Eigen::Index>(l)) * svd.values(static_cast<Eigen::Index>(l));
        }
        double running = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            running += svd.values(static_cast<Eigen::Index>(l)) * svd.values(static_cast<Eigen::Index>(l));
            if (running >= rule.fraction * total) {
                q = l + 1;
                break;
            }
        }
    }
    return std::clamp<std::size_t>(q, 2, d);
}

namespace {

// Sum of projections first..last (1-based, inclusive) using the given left vectors.
Eigen::MatrixXd projection_sum(const Eigen::MatrixXd& left, const SliceSvd& svd, std::size_t first,
                               std::size_t last) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(svd.left.rows(), svd.right.rows());
    if (first > last) {
        return out;
    }
    const auto start = static_cast<Eigen::Index>(first - 1);
    const auto count = static_cast<Eigen::Index>(last - first + 1);
    out.noalias() = left.middleCols(start, count) * svd.values.segment(start, count).asDiagonal() *
                    svd.right.middleCols(start, count).transpose();
    return out;
}

} // namespace

ComponentSplit split_components(const SliceSvd& svd, std::size_t q) {
    if (svd.rank < 1) {
        throw ParameterError("component split needs a slice of rank at least 1");
    }
    if (q < 1 || q > svd.rank) {
        throw BoundsError("rank boundary q=" + std::to_string(q) + " outside [1, " + std::to_string(svd.rank) + "]");
    }
    ComponentSplit split;
    split.q = q;
    split.background = rank_projection(svd, 1);
    split.foreground = projection_sum(svd.left, svd, 2, q);
    split.noise = projection_sum(svd.left, svd, q + 1, svd.rank);
    return split;
}

ComponentSplit split_components(const SliceSvd& svd, const QRule& rule) {
    if (svd.rank < 1) {
        throw ParameterError("component split needs a slice of rank at least 1");
    }
    return split_components(svd, choose_q(svd, rule));
}

bool bin_retained(std::size_t bin, std::size_t length, const BandpassSpec& band) {
    const std::size_t folded = std::min(bin, length - bin);
    const double freq = 2.0 * static_cast<double>(folded) / static_cast<double>(length);
    return band.low <= freq && freq <= band.high;
}

Eigen::VectorXd ideal_bandpass(const Eigen::VectorXd& signal, const BandpassSpec& band) {
    band.validate();
    const auto k = static_cast<std::size_t>(signal.size());
    if (k == 0) {
        return signal;
    }
    std::vector<std::complex<double>> input(k);
    for (std::size_t i = 0; i < k; ++i) {
        input[i] = signal(static_cast<Eigen::Index>(i));
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, input);
    for (std::size_t b = 0; b < k; ++b) {
        if (!bin_retained(b, k, band)) {
            spectrum[b] = 0.0;
        }
    }
    std::vector<std::complex<double>> back;
    fft.inv(back, spectrum);
    Eigen::VectorXd out(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        out(static_cast<Eigen::Index>(i)) = back[i].real();
    }
    return out;
}

SliceSvd filter_left_vectors(const SliceSvd& svd, std::size_t q, const BandpassSpec& band) {
    if (q > svd.rank) {
        throw BoundsError("rank boundary q=" + std::to_string(q) + " exceeds slice rank " +
                          std::to_string(svd.rank));
    }
    band.validate();
    SliceSvd out = svd;
    for (std::size_t l = 2; l <= q; ++l) {
        const auto col = static_cast<Eigen::Index>(l - 1);
        out.left.col(col) = ideal_bandpass(svd.left.col(col), band);
    }
    return out;
}

Eigen::MatrixXd desnow_slice(const SliceSvd& svd, std::size_t q, const BandpassSpec& band, bool drop_noise) {
    if (q > svd.rank) {
        throw BoundsError("rank boundary q=" + std::to_string(q) + " exceeds slice rank " +
                          std::to_string(svd.rank));
    }
    if (svd.rank == 0) {
        return Eigen::MatrixXd::Zero(svd.left.rows(), svd.right.rows());
    }
    const SliceSvd filtered = filter_left_vectors(svd, q, band);
    Eigen::MatrixXd out = rank_projection(svd, 1);
    out += projection_sum(filtered.left, svd, 2, q);
    if (!drop_noise) {
        out += projection_sum(svd.left, svd, q + 1, svd.rank);
    }
    return out;
}

VideoTensor desnow_video(const VideoTensor& video, const DesnowOptions& options, DesnowDiagnostics* diagnostics) {
    if (options.mode == SliceMode::frontal) {
        throw ParameterError("desnowing needs a spatiotemporal slice mode (horizontal or lateral)");
    }
    options.band.validate();

    const std::size_t per_channel = slice_count(video, options.mode);
    const std::size_t total = per_channel * video.channels();
    std::vector<double> buffer(video.values().begin(), video.values().end());
    std::vector<std::size_t> q_values(total, 0);
    std::vector<std::exception_ptr> failures(total);

    auto run = [&](std::size_t task) {
        const std::size_t channel = task / per_channel;
        const std::size_t index = task % per_channel;
        try {
            SliceView slice = extract_slice(video, options.mode, index, channel);
            const SliceSvd svd = slice_svd(slice);
            const std::size_t q = choose_q(svd, options.q_rule);
            q_values[task] = q;
            slice.matrix = desnow_slice(svd, q, options.band, options.drop_noise);
            write_slice(video, buffer, slice);
        } catch (...) {
            failures[task] = std::current_exception();
        }
    };

    if (options.parallel) {
        tbb::parallel_for(tbb::blocked_range<std::size_t>(0, total), [&](const tbb::blocked_range<std::size_t>& r) {
            for (std::size_t task = r.begin(); task != r.end(); ++task) {
                run(task);
            }
        });
    } else {
        for (std::size_t task = 0; task < total; ++task) {
            run(task);
        }
    }

    // Report the lowest failing slice so serial and parallel runs agree.
    for (const auto& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    if (diagnostics != nullptr) {
        diagnostics->slices = total;
        diagnostics->q_per_slice = std::move(q_values);
        if (video.frames() < 4) {
            diagnostics->warnings.push_back("only " + std::to_string(video.frames()) +
                                            " frames: temporal filtering is degenerate below 4 frames");
        }
    }
    return VideoTensor(video.rows(), video.cols(), video.frames(), video.channels(), std::move(buffer));
}

} // namespace snowgt
