#pragma once

#include "snowgt/image.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace snowgt {

struct LossWeights {
    double l1 = 100.0;        // weight of the pixel L1 term inside L_G
    double f_measure = 10.0;  // lambda_f
    double gradient = 10.0;   // lambda_Gd
    double ssim = 1.0;        // weight of the SSIM term in L_Gr
    double alpha = 4.0;       // vertical-gradient emphasis, >= 1
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
    double tau = 0.05;

    void validate() const;
};

struct MaskConfusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    friend bool operator==(const MaskConfusion&, const MaskConfusion&) = default;
};

struct FMeasure {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

/// 10 log10(peak^2 / MSE) over every pixel and channel; +infinity when identical.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Whole-image SSIM from global means, population variances and covariance.
/// Multi-channel inputs return the mean of per-channel values.
double ssim(const Image& a, const Image& b, double c1 = 0.01 * 0.01, double c2 = 0.03 * 0.03);

double mean_absolute_error(const Image& a, const Image& b);

MaskConfusion mask_confusion(const SnowMask& predicted, const SnowMask& reference);

/// precision = TP/(TP+FP), recall = TP/(TP+FN), F their harmonic mean.
/// Both masks empty gives F = 1; TP = 0 otherwise gives F = 0.
FMeasure f_measure(const MaskConfusion& c);

struct FLoss {
    MaskConfusion confusion;
    FMeasure measure;
    double value = 0.0;       // lambda_f * F
    double complement = 0.0;  // lambda_f * (1 - F)
};

/// Compares the mask of X - C (reference) with the mask of X - C_hat.
FLoss loss_f(const Image& degraded, const Image& clean, const Image& estimate, double tau, double weight);

/// sqrt(dx^2 + alpha * dy^2) with central differences and replicated borders.
/// Multi-channel inputs return the mean of per-channel maps.
Image gradient_magnitude(const Image& img, double alpha);

/// weight * mean |grad(a) - grad(b)|.
double gradient_l1_loss(const Image& a, const Image& b, double alpha, double weight);

struct CompositeLosses {
    double adversarial = 0.0;

    double l1_refined = 0.0;      // mean |C - C_hat|
    double l1_first_stage = 0.0;  // mean |C - C'|
    double l_g_refined = 0.0;     // adversarial + lambda * l1_refined
    double l_g_first_stage = 0.0; // adversarial + lambda * l1_first_stage

    double f_measure = 0.0;
    double l_f = 0.0;             // lambda_f * F
    double l_f_complement = 0.0;  // lambda_f * (1 - F)
    double l_s = 0.0;             // l_g_refined + l_f

    double gradient_l1 = 0.0;     // lambda_Gd * mean |grad C - grad C'|
    double l_gd = 0.0;            // l_g_first_stage + gradient_l1

    double ssim = 0.0;
    double l_ssim = 0.0;            // ssim weight * SSIM(C, C_hat)
    double l_ssim_complement = 0.0; // ssim weight * (1 - SSIM)
    double l_gr = 0.0;              // l_g_refined + l_ssim
};

/// Composite objectives with the discriminator terms replaced by `adversarial`.
/// degraded = X, clean = C, refined = C_hat (final estimate), first_stage = C'.
CompositeLosses composite_losses(const Image& degraded, const Image& clean, const Image& refined,
                                 const Image& first_stage, const LossWeights& weights, double adversarial = 0.0);

/// Fixed-order pairwise summation.
double pairwise_sum(std::span<const double> values);

struct ImageMetrics {
    std::string name;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    double gradient_l1 = 0.0;
    // Present only when the degraded input is known.
    std::optional<double> f_measure;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> l_f;
    std::optional<double> l_f_complement;
    double l_ssim = 0.0;
    double l_ssim_complement = 0.0;
};

/// Metrics of one estimate against its reference; degraded enables the mask terms.
ImageMetrics evaluate_pair(const std::string& name, const Image& estimate, const Image& reference,
                           const Image* degraded, const LossWeights& weights);

struct MetricsReport {
    std::vector<ImageMetrics> per_image;
    ImageMetrics mean;
    LossWeights weights;
};

MetricsReport summarize(std::vector<ImageMetrics> rows, const LossWeights& weights);

} // namespace snowgt
