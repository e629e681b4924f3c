// snowgt: command-line front end for the ground-truth pipeline.
#include "snowgt/dataset.hpp"
#include "snowgt/degradation.hpp"
#include "snowgt/errors.hpp"
#include "snowgt/frame_io.hpp"
#include "snowgt/lowrank.hpp"
#include "snowgt/report.hpp"
#include "snowgt/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace snowgt;

namespace {

json particle_json(const Particle& p, LayerKind kind) {
    json j = {{"x", p.x}, {"y", p.y}, {"size", p.size}, {"opacity", p.opacity}};
    if (kind == LayerKind::snow) {
        j["vx"] = p.vx;
        j["vy"] = p.vy;
    } else {
        j["orientation_deg"] = p.orientation_deg;
        j["length"] = p.length;
    }
    return j;
}

struct BackgroundArgs {
    std::string file;
    std::size_t rows = 64;
    std::size_t cols = 64;
    std::size_t channels = 3;
    std::uint64_t seed = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--background", file, "clean background image (default: generated texture)");
        cmd->add_option("--rows", rows, "generated background height")->check(CLI::PositiveNumber);
        cmd->add_option("--cols", cols, "generated background width")->check(CLI::PositiveNumber);
        cmd->add_option("--channels", channels, "generated background channels")->check(CLI::IsMember({1, 3}));
        cmd->add_option("--bg-seed", seed, "seed of the generated background");
    }

    Image load() const { return file.empty() ? make_background(rows, cols, channels, seed) : read_image(file); }
};

void print_failures(const std::vector<std::pair<std::string, std::string>>& failures) {
    for (const auto& [what, msg] : failures) {
        std::cerr << "  failed " << what << ": " << msg << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank ground-truth generation, degradation synthesis and quality metrics"};
    app.require_subcommand(1);

    // desnow
    std::string desnow_in, desnow_out, desnow_mode = "horizontal", desnow_q = "energy:0.999", desnow_band = "0:0.1";
    bool desnow_drop = false, desnow_serial = false;
    auto* desnow = app.add_subcommand("desnow", "desnow a frame directory");
    desnow->add_option("--input", desnow_in, "snowy frame directory")->required();
    desnow->add_option("--output", desnow_out, "output frame directory")->required();
    desnow->add_option("--mode", desnow_mode, "slice mode: horizontal|lateral");
    desnow->add_option("--q", desnow_q, "foreground rank rule: energy:F or fixed:R");
    desnow->add_option("--band", desnow_band, "temporal pass band low:high as fractions of Nyquist");
    desnow->add_flag("--drop-noise", desnow_drop, "discard the residual noise component");
    desnow->add_flag("--serial", desnow_serial, "process slices on one thread");

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic degraded data");
    synth->require_subcommand(1);
    std::string snow_out;
    BackgroundArgs snow_bg;
    SnowParams snow;
    auto* synth_snow = synth->add_subcommand("snow", "falling-snow video over a static background");
    synth_snow->add_option("--out", snow_out, "output directory")->required();
    snow_bg.add_to(synth_snow);
    synth_snow->add_option("--frames", snow.frames, "frame count");
    synth_snow->add_option("--density", snow.density, "fraction of pixels covered per frame");
    synth_snow->add_option("--size-min", snow.size_min);
    synth_snow->add_option("--size-max", snow.size_max);
    synth_snow->add_option("--opacity-min", snow.opacity_min);
    synth_snow->add_option("--opacity-max", snow.opacity_max);
    synth_snow->add_option("--speed-min", snow.speed_min, "fall speed, px/frame");
    synth_snow->add_option("--speed-max", snow.speed_max);
    synth_snow->add_option("--drift", snow.drift, "max horizontal speed, px/frame");
    synth_snow->add_option("--seed", snow.seed);

    std::string rain_out;
    BackgroundArgs rain_bg;
    RainParams rain;
    std::size_t rain_frames = 1;
    auto* synth_rain = synth->add_subcommand("rain", "rain streaks; one independent draw per frame");
    synth_rain->add_option("--out", rain_out, "output directory")->required();
    rain_bg.add_to(synth_rain);
    synth_rain->add_option("--frames", rain_frames, "frame count")->check(CLI::PositiveNumber);
    synth_rain->add_option("--orientation", rain.orientation_deg, "degrees from the x axis, 90 = vertical");
    synth_rain->add_option("--length", rain.length, "streak length, px");
    synth_rain->add_option("--density", rain.density);
    synth_rain->add_option("--opacity", rain.opacity);
    synth_rain->add_option("--width", rain.width, "cross-profile sigma, px");
    synth_rain->add_option("--seed", rain.seed);

    // eval
    std::string eval_pred, eval_gt, eval_degraded, eval_report;
    LossWeights weights;
    auto* eval = app.add_subcommand("eval", "score predicted images against ground truth");
    eval->add_option("--pred", eval_pred, "predicted image directory")->required();
    eval->add_option("--gt", eval_gt, "ground-truth directory")->required();
    eval->add_option("--degraded", eval_degraded, "degraded input directory (enables mask metrics)");
    eval->add_option("--report", eval_report, "JSON report path")->required();
    eval->add_option("--tau", weights.tau, "residual binarization threshold");

    // dataset
    std::string root = ".";
    std::vector<std::string> ingest_dirs;
    bool ingest_split = false;
    auto* ingest = app.add_subcommand("ingest", "register frame directories in the dataset");
    ingest->add_option("--root", root, "dataset root");
    ingest->add_option("dirs", ingest_dirs, "frame directories");
    ingest->add_flag("--split", ingest_split, "register the four quadrants of each video");

    std::string cand_video;
    std::vector<std::string> cand_sets;
    auto* candidates = app.add_subcommand("candidates", "generate desnowed candidate frames");
    candidates->add_option("--root", root, "dataset root");
    candidates->add_option("--video", cand_video, "video id")->required();
    candidates->add_option("--set", cand_sets, "mode,q,band[,drop-noise]; repeatable")
        ->default_str("horizontal,energy:0.999,0:0.1");

    std::string sel_video, sel_note, sel_params;
    std::size_t sel_frame = 0;
    auto* select = app.add_subcommand("select", "record the ground-truth frame of a video");
    select->add_option("--root", root, "dataset root");
    select->add_option("--video", sel_video)->required();
    select->add_option("--frame", sel_frame)->required();
    select->add_option("--note", sel_note);
    select->add_option("--params", sel_params, "candidate tag (default: first available)");

    std::string rej_video, rej_note;
    auto* reject = app.add_subcommand("reject", "mark a video as unusable");
    reject->add_option("--root", root, "dataset root");
    reject->add_option("--video", rej_video)->required();
    reject->add_option("--note", rej_note);

    std::string export_out;
    auto* exp = app.add_subcommand("export", "write snowy/ground-truth pairs and a metrics report");
    exp->add_option("--root", root, "dataset root");
    exp->add_option("--out", export_out, "output directory (default: <root>/export)");

    std::string bind = "127.0.0.1:8641", static_dir;
    auto* serve = app.add_subcommand("serve", "run the curation HTTP API");
    serve->add_option("--root", root, "dataset root");
    serve->add_option("--bind", bind, "host:port");
    serve->add_option("--static", static_dir, "directory served at /");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*desnow) {
            DesnowOptions opt;
            opt.mode = parse_slice_mode(desnow_mode);
            opt.q_rule = QRule::parse(desnow_q);
            opt.band = BandpassSpec::parse(desnow_band);
            opt.drop_noise = desnow_drop;
            opt.parallel = !desnow_serial;
            DesnowDiagnostics diag;
            const VideoTensor out = desnow_video(load_frames(desnow_in), opt, &diag);
            for (const auto& w : diag.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
            save_frames(desnow_out, out);
            std::cout << "desnowed " << out.frames() << " frames (" << diag.slices << " slices) -> " << desnow_out
                      << "\n";
        } else if (*synth_snow) {
            const SnowVideo sv = synth_snow_video(snow_bg.load(), snow);
            const fs::path out(snow_out);
            save_frames(out, sv.video);
            fs::create_directories(out / "masks");
            for (std::size_t f = 0; f < sv.masks.size(); ++f) {
                write_mask_png(out / "masks" / frame_name(f), sv.masks[f]);
            }
            fs::create_directories(out / "clean");
            write_png(out / "clean" / "background.png", snow_bg.load());
            json particles = json::array();
            for (const Particle& p : sv.particles) {
                particles.push_back(particle_json(p, LayerKind::snow));
            }
            write_json(out / "particles.json", {{"kind", "snow"},
                                                {"rows", sv.video.rows()},
                                                {"cols", sv.video.cols()},
                                                {"frames", sv.video.frames()},
                                                {"seed", snow.seed},
                                                {"particles", particles}});
            std::cout << "wrote " << sv.video.frames() << " frames, " << sv.particles.size() << " particles -> "
                      << out.string() << "\n";
        } else if (*synth_rain) {
            const Image background = rain_bg.load();
            const fs::path out(rain_out);
            fs::create_directories(out / "masks");
            fs::create_directories(out / "clean");
            write_png(out / "clean" / "background.png", background);
            json frames = json::array();
            std::size_t total = 0;
            for (std::size_t f = 0; f < rain_frames; ++f) {
                RainParams p = rain;
                p.seed = rain.seed + f;
                const RainImage ri = synth_rain_streaks(background, p);
                write_png(out / frame_name(f), ri.degraded);
                write_mask_png(out / "masks" / frame_name(f), ri.mask);
                json particles = json::array();
                for (const Particle& q : ri.layer.particles) {
                    particles.push_back(particle_json(q, LayerKind::rain));
                }
                total += ri.layer.particles.size();
                frames.push_back({{"frame", f}, {"seed", p.seed}, {"particles", particles}});
            }
            write_json(out / "particles.json", {{"kind", "rain"},
                                                {"rows", background.rows()},
                                                {"cols", background.cols()},
                                                {"frames", frames}});
            std::cout << "wrote " << rain_frames << " frames, " << total << " streaks -> " << out.string() << "\n";
        } else if (*eval) {
            std::optional<fs::path> degraded;
            if (!eval_degraded.empty()) {
                degraded = eval_degraded;
            }
            weights.validate();
            const MetricsReport report = evaluate_directories(eval_pred, eval_gt, degraded, weights);
            write_json(eval_report, to_json(report));
            std::printf("%zu images  mean PSNR %.4f dB  mean SSIM %.6f\n", report.per_image.size(),
                        report.mean.psnr, report.mean.ssim);
        } else if (*ingest) {
            Dataset ds(root);
            std::vector<fs::path> dirs(ingest_dirs.begin(), ingest_dirs.end());
            const IngestReport r = ds.ingest(dirs, ingest_split);
            for (const auto& id : r.added) {
                std::cout << "added " << id << "\n";
            }
            for (const auto& id : r.conflicts) {
                std::cerr << "conflict: video id '" << id << "' already exists\n";
            }
            print_failures(r.failures);
            return r.conflicts.empty() && r.failures.empty() ? 0 : 1;
        } else if (*candidates) {
            Dataset ds(root);
            std::vector<CandidateParams> sets;
            for (const auto& s : cand_sets) {
                sets.push_back(CandidateParams::parse(s));
            }
            if (sets.empty()) {
                sets.emplace_back();
            }
            const CandidateReport r = ds.generate_candidates(cand_video, sets);
            for (const auto& w : r.warnings) {
                std::cerr << "warning: " << w << "\n";
            }
            for (const auto& tag : r.generated) {
                std::cout << "generated " << tag << "\n";
            }
            print_failures(r.failures);
            return r.failures.empty() ? 0 : 1;
        } else if (*select) {
            Dataset ds(root);
            ds.record_selection(sel_video, sel_frame, sel_note, sel_params);
            std::cout << "selected frame " << sel_frame << " of " << sel_video << " (revision "
                      << ds.manifest().revision << ")\n";
        } else if (*reject) {
            Dataset ds(root);
            ds.record_rejection(rej_video, rej_note);
            std::cout << "rejected " << rej_video << "\n";
        } else if (*exp) {
            Dataset ds(root);
            const fs::path out = export_out.empty() ? ds.root() / "export" : fs::path(export_out);
            const ExportResult r = ds.export_pairs(out);
            std::cout << r.pairs.size() << " pairs -> " << out.string() << ", report " << r.report_path.string()
                      << "\n";
            print_failures(r.failures);
            return r.failures.empty() ? 0 : 1;
        } else if (*serve) {
            Dataset ds(root);
            ServerOptions opt;
            std::tie(opt.host, opt.port) = parse_bind_address(bind);
            if (!static_dir.empty()) {
                opt.static_dir = static_dir;
            }
            CurationServer server(ds, opt);
            const int port = server.bind();
            std::cout << "serving " << ds.root().string() << " on http://" << opt.host << ":" << port << "\n"
                      << std::flush;
            server.listen();
        }
    } catch (const NumericFailure& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return *desnow ? 2 : 1;
    } catch (const Error& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
