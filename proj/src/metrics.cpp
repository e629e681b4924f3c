#include "snowgt/metrics.hpp"

#include "snowgt/degradation.hpp"
#include "snowgt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snowgt {

void LossWeights::validate() const {
    if (l1 < 0.0 || f_measure < 0.0 || gradient < 0.0 || ssim < 0.0) {
        throw ParameterError("loss weights must be non-negative");
    }
    if (alpha < 1.0) {
        throw ParameterError("alpha must be at least 1");
    }
    if (!(c1 > 0.0 && c2 > 0.0)) {
        throw ParameterError("SSIM constants must be positive");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw ParameterError("mask threshold must lie in (0, 1)");
    }
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double psnr(const Image& a, const Image& b, double peak) {
    require_same_shape(a, b, "psnr");
    if (a.empty()) {
        throw DimensionMismatch("psnr of empty images");
    }
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        sq[i] = d * d;
    }
    const double mse = pairwise_sum(sq) / static_cast<double>(sq.size());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b, double c1, double c2) {
    require_same_shape(a, b, "ssim");
    if (a.empty()) {
        throw DimensionMismatch("ssim of empty images");
    }
    const std::size_t channels = a.channels();
    const std::size_t pixels = a.rows() * a.cols();
    const auto count = static_cast<double>(pixels);
    std::vector<double> per_channel;
    std::vector<double> buf(pixels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        auto gather = [&](const Image& img, auto&& fn) {
            for (std::size_t i = 0; i < pixels; ++i) {
                buf[i] = fn(img.values()[i * channels + ch], i);
            }
            return pairwise_sum(buf) / count;
        };
        const double mu_a = gather(a, [](double v, std::size_t) { return v; });
        const double mu_b = gather(b, [](double v, std::size_t) { return v; });
        const double var_a = gather(a, [&](double v, std::size_t) { return (v - mu_a) * (v - mu_a); });
        const double var_b = gather(b, [&](double v, std::size_t) { return (v - mu_b) * (v - mu_b); });
        const double cov = gather(a, [&](double v, std::size_t i) {
            return (v - mu_a) * (b.values()[i * channels + ch] - mu_b);
        });
        const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
        const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        per_channel.push_back(num / den);
    }
    return pairwise_sum(per_channel) / static_cast<double>(channels);
}

double mean_absolute_error(const Image& a, const Image& b) {
    require_same_shape(a, b, "l1");
    if (a.empty()) {
        throw DimensionMismatch("l1 of empty images");
    }
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = std::abs(a.values()[i] - b.values()[i]);
    }
    return pairwise_sum(diff) / static_cast<double>(diff.size());
}

MaskConfusion mask_confusion(const SnowMask& predicted, const SnowMask& reference) {
    if (predicted.rows != reference.rows || predicted.cols != reference.cols) {
        throw DimensionMismatch("mask shapes differ");
    }
    MaskConfusion c;
    for (std::size_t i = 0; i < predicted.bits.size(); ++i) {
        const bool p = predicted.bits[i] != 0;
        const bool r = reference.bits[i] != 0;
        c.tp += (p && r) ? 1 : 0;
        c.fp += (p && !r) ? 1 : 0;
        c.fn += (!p && r) ? 1 : 0;
    }
    return c;
}

FMeasure f_measure(const MaskConfusion& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
        return {1.0, 1.0, 1.0};
    }
    FMeasure out;
    const auto tp = static_cast<double>(c.tp);
    out.precision = c.tp + c.fp == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fp);
    out.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
    if (c.tp == 0) {
        return out;
    }
    out.f = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

FLoss loss_f(const Image& degraded, const Image& clean, const Image& estimate, double tau, double weight) {
    require_same_shape(degraded, clean, "loss_F");
    require_same_shape(degraded, estimate, "loss_F");
    const SnowMask reference = binarize(residual(degraded, clean), tau);
    const SnowMask predicted = binarize(residual(degraded, estimate), tau);
    FLoss out;
    out.confusion = mask_confusion(predicted, reference);
    out.measure = f_measure(out.confusion);
    out.value = weight * out.measure.f;
    out.complement = weight * (1.0 - out.measure.f);
    return out;
}

Image gradient_magnitude(const Image& img, double alpha) {
    const std::size_t rows = img.rows();
    const std::size_t cols = img.cols();
    const std::size_t channels = img.channels();
    Image out(rows, cols, 1);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t up = r == 0 ? 0 : r - 1;
        const std::size_t down = r + 1 == rows ? r : r + 1;
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t left = c == 0 ? 0 : c - 1;
            const std::size_t right = c + 1 == cols ? c : c + 1;
            double acc = 0.0;
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const double dx = (img.at(r, right, ch) - img.at(r, left, ch)) / 2.0;
                const double dy = (img.at(down, c, ch) - img.at(up, c, ch)) / 2.0;
                acc += std::sqrt(dx * dx + alpha * dy * dy);
            }
            out.at(r, c) = acc / static_cast<double>(channels);
        }
    }
    return out;
}

double gradient_l1_loss(const Image& a, const Image& b, double alpha, double weight) {
    require_same_shape(a, b, "gradient_l1_loss");
    return weight * mean_absolute_error(gradient_magnitude(a, alpha), gradient_magnitude(b, alpha));
}

CompositeLosses composite_losses(const Image& degraded, const Image& clean, const Image& refined,
                                 const Image& first_stage, const LossWeights& weights, double adversarial) {
    weights.validate();
    require_same_shape(degraded, clean, "composite_losses");
    require_same_shape(refined, clean, "composite_losses");
    require_same_shape(first_stage, clean, "composite_losses");

    CompositeLosses out;
    out.adversarial = adversarial;
    out.l1_refined = mean_absolute_error(clean, refined);
    out.l1_first_stage = mean_absolute_error(clean, first_stage);
    out.l_g_refined = adversarial + weights.l1 * out.l1_refined;
    out.l_g_first_stage = adversarial + weights.l1 * out.l1_first_stage;

    const FLoss f = loss_f(degraded, clean, refined, weights.tau, weights.f_measure);
    out.f_measure = f.measure.f;
    out.l_f = f.value;
    out.l_f_complement = f.complement;
    out.l_s = out.l_g_refined + out.l_f;

    out.gradient_l1 = gradient_l1_loss(clean, first_stage, weights.alpha, weights.gradient);
    out.l_gd = out.l_g_first_stage + out.gradient_l1;

    out.ssim = ssim(clean, refined, weights.c1, weights.c2);
    out.l_ssim = weights.ssim * out.ssim;
    out.l_ssim_complement = weights.ssim * (1.0 - out.ssim);
    out.l_gr = out.l_g_refined + out.l_ssim;
    return out;
}

ImageMetrics evaluate_pair(const std::string& name, const Image& estimate, const Image& reference,
                           const Image* degraded, const LossWeights& weights) {
    weights.validate();
    require_same_shape(estimate, reference, "evaluate");
    ImageMetrics m;
    m.name = name;
    m.psnr = psnr(estimate, reference);
    m.ssim = ssim(reference, estimate, weights.c1, weights.c2);
    m.l1 = mean_absolute_error(reference, estimate);
    m.gradient_l1 = gradient_l1_loss(reference, estimate, weights.alpha, weights.gradient);
    m.l_ssim = weights.ssim * m.ssim;
    m.l_ssim_complement = weights.ssim * (1.0 - m.ssim);
    if (degraded != nullptr) {
        const FLoss f = loss_f(*degraded, reference, estimate, weights.tau, weights.f_measure);
        m.f_measure = f.measure.f;
        m.precision = f.measure.precision;
        m.recall = f.measure.recall;
        m.l_f = f.value;
        m.l_f_complement = f.complement;
    }
    return m;
}

namespace {

double mean_of(const std::vector<ImageMetrics>& rows, double ImageMetrics::*field) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const auto& r : rows) {
        v.push_back(r.*field);
    }
    return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

std::optional<double> mean_of(const std::vector<ImageMetrics>& rows, std::optional<double> ImageMetrics::*field) {
    std::vector<double> v;
    for (const auto& r : rows) {
        if ((r.*field).has_value()) {
            v.push_back(*(r.*field));
        }
    }
    if (v.empty()) {
        return std::nullopt;
    }
    return pairwise_sum(v) / static_cast<double>(v.size());
}

} // namespace

MetricsReport summarize(std::vector<ImageMetrics> rows, const LossWeights& weights) {
    MetricsReport report;
    report.weights = weights;
    ImageMetrics& mean = report.mean;
    mean.name = "mean";
    mean.psnr = mean_of(rows, &ImageMetrics::psnr);
    mean.ssim = mean_of(rows, &ImageMetrics::ssim);
    mean.l1 = mean_of(rows, &ImageMetrics::l1);
    mean.gradient_l1 = mean_of(rows, &ImageMetrics::gradient_l1);
    mean.l_ssim = mean_of(rows, &ImageMetrics::l_ssim);
    mean.l_ssim_complement = mean_of(rows, &ImageMetrics::l_ssim_complement);
    mean.f_measure = mean_of(rows, &ImageMetrics::f_measure);
    mean.precision = mean_of(rows, &ImageMetrics::precision);
    mean.recall = mean_of(rows, &ImageMetrics::recall);
    mean.l_f = mean_of(rows, &ImageMetrics::l_f);
    mean.l_f_complement = mean_of(rows, &ImageMetrics::l_f_complement);
    report.per_image = std::move(rows);
    return report;
}

} // namespace snowgt
