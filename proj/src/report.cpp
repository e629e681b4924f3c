#include "snowgt/report.hpp"

#include "snowgt/errors.hpp"
#include "snowgt/frame_io.hpp"

#include <cmath>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace snowgt {

namespace {

json number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

json number(const std::optional<double>& v) {
    return v ? number(*v) : json(nullptr);
}

} // namespace

json to_json(const ImageMetrics& m) {
    return {{"name", m.name},
            {"psnr", number(m.psnr)},
            {"ssim", number(m.ssim)},
            {"f_measure", number(m.f_measure)},
            {"precision", number(m.precision)},
            {"recall", number(m.recall)},
            {"l1", number(m.l1)},
            {"gradient_l1", number(m.gradient_l1)},
            {"L_F", number(m.l_f)},
            {"L_F_complement", number(m.l_f_complement)},
            {"L_SSIM", number(m.l_ssim)},
            {"L_SSIM_complement", number(m.l_ssim_complement)}};
}

json to_json(const LossWeights& w) {
    return {{"lambda", w.l1}, {"lambda_f", w.f_measure}, {"lambda_gd", w.gradient}, {"lambda_ssim", w.ssim},
            {"alpha", w.alpha}, {"c1", w.c1}, {"c2", w.c2}, {"tau", w.tau}};
}

json to_json(const MetricsReport& report) {
    json rows = json::array();
    for (const auto& m : report.per_image) {
        rows.push_back(to_json(m));
    }
    json mean = to_json(report.mean);
    mean.erase("name");
    return {{"per_image", rows}, {"mean", mean}, {"weights", to_json(report.weights)}};
}

void write_json(const fs::path& file, const json& doc) {
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + file.string());
    }
    out << doc.dump(2) << "\n";
    if (!out) {
        throw IoError("write to " + file.string() + " failed");
    }
}

MetricsReport evaluate_directories(const fs::path& pred_dir, const fs::path& gt_dir,
                                   const std::optional<fs::path>& degraded_dir, const LossWeights& weights) {
    const auto pred_files = list_frame_files(pred_dir);
    if (pred_files.empty()) {
        throw IoError("no images in " + pred_dir.string());
    }
    std::vector<ImageMetrics> rows;
    for (const auto& pred_file : pred_files) {
        const fs::path name = pred_file.filename();
        const fs::path gt_file = gt_dir / name;
        if (!fs::exists(gt_file)) {
            throw IoError("no reference image " + gt_file.string() + " for " + pred_file.string());
        }
        const Image pred = read_image(pred_file);
        const Image gt = read_image(gt_file, pred.channels());
        std::optional<Image> degraded;
        if (degraded_dir) {
            degraded = read_image(*degraded_dir / name, pred.channels());
        }
        rows.push_back(evaluate_pair(name.stem().string(), pred, gt, degraded ? &*degraded : nullptr, weights));
    }
    return summarize(std::move(rows), weights);
}

} // namespace snowgt
