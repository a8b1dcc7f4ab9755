// scma_lab.cpp - command-line front end: sweeps, training, complexity,
// benchmarks and constellation exports
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scma/autoencoder.hpp"
#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/detectors.hpp"
#include "scma/dl_decoder.hpp"
#include "scma/lab_config.hpp"
#include "scma/sweep.hpp"

#ifndef SCMA_LAB_DATA_DIR
#define SCMA_LAB_DATA_DIR "data"
#endif

namespace {

using namespace scma;

std::string default_codebook_path() {
    return std::string(SCMA_LAB_DATA_DIR) + "/baseline_codebook.json";
}

// --out wins; otherwise SCMA_LAB_OUTDIR/<name>; otherwise ./<name>
std::string resolve_out(const std::string& out, const std::string& default_name) {
    if (!out.empty()) return out;
    if (const char* dir = std::getenv("SCMA_LAB_OUTDIR"))
        return std::string(dir) + "/" + default_name;
    return default_name;
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> grid;
    if (s.find(':') != std::string::npos) {
        double start = 0, step = 0, stop = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(s);
        if (!(is >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || step <= 0)
            throw std::invalid_argument("bad Eb/N0 range, expected start:step:stop");
        for (double v = start; v <= stop + 1e-9; v += step) grid.push_back(v);
        return grid;
    }
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) grid.push_back(std::stod(tok));
    return grid;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string config_path;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "random seed (results are reproducible for a fixed seed)");
    cmd->add_option("--config", o.config_path, "run configuration JSON");
    cmd->add_option("--out", o.out, "output file");
}

LabConfig load_config_or_default(const CommonOpts& o) {
    if (!o.config_path.empty()) return load_lab_config(o.config_path);
    return LabConfig{};
}

Codebook load_codebook_for(const LabConfig& cfg, const std::string& cli_path) {
    std::string path = !cli_path.empty() ? cli_path
                       : !cfg.codebook_path.empty() ? cfg.codebook_path
                                                    : default_codebook_path();
    return Codebook::load(path);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

// detector spec strings: map | logmpa:<it> | dl:<ckpt> | ae:<ckpt>
struct LoadedDetector {
    DetectorSpec spec;
    std::optional<nn::Network> net;  // keeps the network alive for spec.net
    std::optional<Codebook> learned;
};

LoadedDetector make_detector(const std::string& token, int default_iters) {
    LoadedDetector d;
    auto colon = token.find(':');
    const std::string kind = token.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : token.substr(colon + 1);
    if (kind == "map") {
        d.spec.kind = DetectorKind::map;
        d.spec.name = "map";
    } else if (kind == "logmpa") {
        d.spec.kind = DetectorKind::logmpa;
        d.spec.iterations = arg.empty() ? default_iters : std::stoi(arg);
        d.spec.name = "logmpa_it" + std::to_string(d.spec.iterations);
    } else if (kind == "dl") {
        if (arg.empty()) throw std::invalid_argument("dl detector needs dl:<checkpoint>");
        d.net = load_decoder(arg).net;
        d.spec.kind = DetectorKind::nn;
        d.spec.name = "dl-decoder";
    } else if (kind == "ae") {
        if (arg.empty()) throw std::invalid_argument("ae detector needs ae:<checkpoint>");
        Autoencoder ae = load_autoencoder(arg);
        d.learned = extract_codebooks(ae);
        d.net = std::move(ae.decoder);
        d.spec.kind = DetectorKind::nn;
        d.spec.name = "ae-decoder";
    } else {
        throw std::invalid_argument("unknown detector: " + token);
    }
    if (d.net) d.spec.net = &*d.net;
    return d;
}

int cmd_complexity(const CommonOpts& o, const std::string& its, int width, int layers) {
    LabConfig cfg = load_config_or_default(o);
    DecoderArch arch{layers, width};
    auto rows = compare_complexity(cfg.system, parse_int_list(its), arch);
    std::ostringstream csv;
    write_complexity_csv(csv, rows);
    const std::string path = resolve_out(o.out, "complexity.csv");
    write_file(path, csv.str());
    std::cout << csv.str();
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& detector, int iterations,
              const std::string& checkpoint, const std::string& codebook_path,
              const std::string& grid, long long min_errors, long long min_frames,
              long long max_frames, std::size_t chunk, int threads, bool noiseless,
              bool timing) {
    LabConfig cfg = load_config_or_default(o);
    std::string token = detector.empty() ? (cfg.detector_kind.empty() ? "map" : cfg.detector_kind)
                                         : detector;
    if ((token == "dl" || token == "ae") && !checkpoint.empty()) token += ":" + checkpoint;
    if (token == "logmpa") token += ":" + std::to_string(iterations);
    LoadedDetector det = make_detector(token, iterations);

    Codebook cb = det.learned && codebook_path.empty() ? *det.learned
                                                       : load_codebook_for(cfg, codebook_path);
    ChannelGain gains = gains_for(cfg, cb.resources());

    SweepSpec spec;
    spec.detector = det.spec;
    spec.ebn0_db = parse_grid(grid);
    spec.stop.min_bit_errors = min_errors;
    spec.stop.min_frames = min_frames;
    spec.stop.max_frames = max_frames;
    spec.seed = o.seed;
    spec.noiseless = noiseless;
    spec.measure_time = timing;
    spec.threads = threads;
    spec.chunk_frames = chunk;

    SweepResult res = run_sweep(cb, gains, spec);
    std::ostringstream csv;
    write_sweep_csv(csv, res);
    const std::string path = resolve_out(o.out, "sweep.csv");
    write_file(path, csv.str());
    std::cout << csv.str();
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_train_decoder(const CommonOpts& o, const std::string& groups_arg,
                      const std::string& ebn0_list, std::size_t samples_per_group, int epochs,
                      std::size_t batch, double lr, double val_frac, int arch_layers,
                      int arch_width, bool noiseless, const std::string& codebook_path,
                      const std::string& loss_curve, const std::string& export_data) {
    LabConfig cfg = load_config_or_default(o);
    Codebook cb = load_codebook_for(cfg, codebook_path);
    ChannelGain gains = gains_for(cfg, cb.resources());

    std::vector<EbnoGroup> groups;
    if (!groups_arg.empty()) {
        std::istringstream is(groups_arg);
        std::string tok;
        while (std::getline(is, tok, ',')) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::invalid_argument("--groups expects ebn0:samples,...");
            groups.push_back({std::stod(tok.substr(0, colon)),
                              static_cast<std::size_t>(std::stoull(tok.substr(colon + 1)))});
        }
    } else {
        for (double e : parse_grid(ebn0_list)) groups.push_back({e, samples_per_group});
    }

    Rng data_rng(derive_seed(o.seed, 0x7a0));
    TrainingSet set = generate_training_set(cb, gains, groups, data_rng, noiseless);
    if (!export_data.empty()) export_dataset(set, export_data);

    TrainHyper hyper;
    hyper.batch = batch;
    hyper.epochs = epochs;
    hyper.lr = lr;
    hyper.seed = o.seed;
    hyper.val_fraction = val_frac;
    DecoderArch arch{arch_layers, arch_width};
    DecoderTrainResult res = train_decoder(cb.config(), arch, set, hyper);

    const std::string path = resolve_out(o.out, "dl_decoder.json");
    save_decoder(res.decoder, path);
    if (!loss_curve.empty()) {
        std::ostringstream csv;
        csv << "# scma-lab loss curve csv v1\nepoch,train_loss,val_loss\n";
        for (size_t e = 0; e < res.curve.size(); ++e)
            csv << e << ',' << format_double(res.curve[e].train_loss) << ','
                << format_double(res.curve[e].val_loss) << "\n";
        write_file(loss_curve, csv.str());
    }
    std::cout << "trained decoder: final train loss "
              << format_double(res.decoder.final_train_loss) << ", best val loss "
              << format_double(res.decoder.best_val_loss) << "\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_train_autoencoder(const CommonOpts& o, double train_ebn0, std::size_t samples,
                          std::size_t batch, double lr, const std::string& masks_kind,
                          double density, const std::string& graph_path, int enc_layers,
                          int enc_width, int dec_layers, int dec_width,
                          const std::string& loss_curve, const std::string& export_cb) {
    LabConfig cfg = load_config_or_default(o);
    SystemConfig sys = cfg.system;

    std::vector<MappingMask> masks;
    if (masks_kind == "dcma") {
        masks = make_dcma_masks(sys, density);
        sys.nonzero_per_codeword = masks.front().occupied();
    } else if (masks_kind == "scma") {
        FactorGraph g = graph_path.empty() ? FactorGraph::canonical()
                                           : FactorGraph::from_file(graph_path);
        if (g.users() != sys.users || g.resources() != sys.resources)
            throw std::invalid_argument("factor graph does not match the system dimensions");
        g.validate_column_weight(sys.nonzero_per_codeword);
        masks = derive_masks(g);
    } else {
        throw std::invalid_argument("--masks must be scma or dcma");
    }

    const FactorGraph g = graph_from_masks(masks);
    double df = 0.0;
    for (int k = 0; k < g.resources(); ++k) df += g.row_weight(k);
    df /= g.resources();

    Rng init_rng(derive_seed(o.seed, 0xae0));
    Autoencoder ae = build_autoencoder(sys, masks, EncoderArch{enc_layers, enc_width},
                                       AeDecoderArch{dec_layers, dec_width},
                                       ChannelGain::ones(sys.resources), init_rng);
    AeHyper hyper;
    hyper.train_ebn0_db = train_ebn0;
    hyper.batch = batch;
    hyper.samples = samples;
    hyper.lr = lr;
    hyper.seed = o.seed;
    AeTrainResult res = train_autoencoder(ae, hyper);

    nlohmann::json prov;
    prov["seed"] = o.seed;
    prov["train_ebn0_db"] = train_ebn0;
    prov["samples"] = samples;
    prov["batch"] = batch;
    prov["lr"] = lr;
    prov["steps"] = res.steps;
    prov["final_loss"] = res.final_loss;
    prov["coverage"] = res.coverage;
    prov["pattern_total"] = res.pattern_total;
    prov["mask_kind"] = masks_kind;
    prov["overlap_degree"] = df;

    const std::string path = resolve_out(o.out, "ae_scma.json");
    save_autoencoder(ae, path, prov);
    if (!loss_curve.empty()) {
        std::ostringstream csv;
        csv << "# scma-lab loss curve csv v1\nstep,train_loss\n";
        for (size_t s = 0; s < res.loss_curve.size(); ++s)
            csv << s << ',' << format_double(res.loss_curve[s]) << "\n";
        write_file(loss_curve, csv.str());
    }
    if (!export_cb.empty()) extract_codebooks(ae).save(export_cb);
    std::cout << "trained autoencoder: final loss " << format_double(res.final_loss)
              << ", coverage " << res.coverage << "/" << res.pattern_total
              << ", overlap degree " << format_double(df) << "\n";
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_export_codebook(const CommonOpts& o, const std::string& checkpoint) {
    Autoencoder ae = load_autoencoder(checkpoint);
    Codebook cb = extract_codebooks(ae);
    const std::string path = resolve_out(o.out, "learned_codebook.json");
    cb.save(path);
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_bench(const CommonOpts& o, const std::string& detectors, long long frames,
              long long warmup, double ebn0, const std::string& codebook_path) {
    LabConfig cfg = load_config_or_default(o);
    Codebook cb = load_codebook_for(cfg, codebook_path);
    ChannelGain gains = gains_for(cfg, cb.resources());

    std::vector<LoadedDetector> loaded;
    std::istringstream is(detectors);
    std::string tok;
    while (std::getline(is, tok, ',')) loaded.push_back(make_detector(tok, 5));
    std::vector<DetectorSpec> specs;
    for (auto& d : loaded) specs.push_back(d.spec);

    auto rows = benchmark_runtime(cb, gains, specs, frames, warmup, ebn0, o.seed);

    nlohmann::json j;
    j["format"] = "scma-lab-bench";
    j["version"] = 1;
    j["hardware"] = hardware_descriptor();
    j["note"] = "ns_per_frame values are wall-clock measurements and vary run to run; "
                "frames and decisions_hash are seed-determined";
    j["ebn0_db"] = ebn0;
    j["frames"] = frames;
    j["warmup"] = warmup;
    j["seed"] = o.seed;
    j["detectors"] = nlohmann::json::array();
    for (const auto& r : rows) {
        j["detectors"].push_back({{"name", r.name},
                                  {"frames", r.frames},
                                  {"ns_per_frame", r.ns_per_frame},
                                  {"decisions_hash", r.decisions_hash}});
        std::cout << r.name << ": " << r.ns_per_frame << " ns/frame\n";
    }
    const std::string path = resolve_out(o.out, "bench.json");
    write_file(path, j.dump(1) + "\n");
    std::cout << "wrote " << path << "\n";
    return 0;
}

int cmd_constellation(const CommonOpts& o, const std::string& codebook_path, int resource,
                      std::size_t samples, double ebn0) {
    LabConfig cfg = load_config_or_default(o);
    Codebook cb = load_codebook_for(cfg, codebook_path);
    ChannelGain gains = gains_for(cfg, cb.resources());
    auto pts = constellation_projection(cb, gains, resource);
    std::vector<ConstellationPoint> rx;
    if (samples > 0) {
        Rng rng(derive_seed(o.seed, 0xc0));
        rx = received_samples(cb, gains, resource, samples, ebn0, rng);
    }
    std::ostringstream csv;
    write_constellation_csv(csv, pts, rx);
    const std::string path = resolve_out(o.out, "constellation.csv");
    write_file(path, csv.str());
    std::cout << "wrote " << path << " (" << pts.size() << " codebook points, " << rx.size()
              << " samples)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scma-lab: multi-user SCMA/DCMA physical-layer laboratory"};
    app.require_subcommand(0, 1);

    CommonOpts o_cx, o_sw, o_td, o_ta, o_ec, o_be, o_cn;

    auto* cx = app.add_subcommand("complexity", "closed-form detector cost table");
    std::string cx_its = "3,5,7";
    int cx_width = 48, cx_layers = 6;
    cx->add_option("--it", cx_its, "Log-MPA iteration counts, comma separated");
    cx->add_option("--width", cx_width, "decoder hidden width");
    cx->add_option("--layers", cx_layers, "decoder hidden layer count");
    add_common(cx, o_cx);

    auto* sw = app.add_subcommand("sweep", "Monte-Carlo BER/SER sweep");
    std::string sw_detector, sw_checkpoint, sw_codebook, sw_grid = "0:2:16";
    int sw_iters = 5, sw_threads = 1;
    long long sw_min_err = 100, sw_min_frames = 1000, sw_max_frames = 1'000'000;
    std::size_t sw_chunk = 2048;
    bool sw_noiseless = false, sw_timing = false;
    sw->add_option("--detector", sw_detector, "map | logmpa | dl | ae");
    sw->add_option("--iterations", sw_iters, "Log-MPA iterations");
    sw->add_option("--checkpoint", sw_checkpoint, "checkpoint for dl/ae detectors");
    sw->add_option("--codebook", sw_codebook, "codebook JSON");
    sw->add_option("--ebn0", sw_grid, "Eb/N0 grid in dB: start:step:stop or comma list");
    sw->add_option("--min-errors", sw_min_err, "stop after this many bit errors");
    sw->add_option("--min-frames", sw_min_frames, "frame floor per point");
    sw->add_option("--max-frames", sw_max_frames, "frame cap per point");
    sw->add_option("--chunk", sw_chunk, "frames per Monte-Carlo chunk");
    sw->add_option("--threads", sw_threads, "worker count (results independent of it)");
    sw->add_flag("--noiseless", sw_noiseless, "disable channel noise");
    sw->add_flag("--timing", sw_timing, "record ns/frame (non-reproducible field)");
    add_common(sw, o_sw);

    auto* td = app.add_subcommand("train-decoder", "train the learned decoder");
    std::string td_groups, td_ebn0 = "2,3,4,5,6", td_codebook, td_curve, td_export;
    std::size_t td_samples = 100000, td_batch = 256;
    int td_epochs = 30, td_layers = 6, td_width = 48;
    double td_lr = 1e-4, td_val = 0.05;
    bool td_noiseless = false;
    td->add_option("--groups", td_groups, "explicit groups ebn0:samples,...");
    td->add_option("--ebn0-list", td_ebn0, "group Eb/N0 values (dB)");
    td->add_option("--samples-per-group", td_samples, "samples per group");
    td->add_option("--epochs", td_epochs, "training epochs");
    td->add_option("--batch", td_batch, "mini-batch size");
    td->add_option("--lr", td_lr, "Adam learning rate");
    td->add_option("--val-frac", td_val, "held-out validation fraction");
    td->add_option("--arch-layers", td_layers, "hidden layer count");
    td->add_option("--arch-width", td_width, "hidden width");
    td->add_option("--codebook", td_codebook, "codebook JSON");
    td->add_option("--loss-curve", td_curve, "write per-epoch losses CSV");
    td->add_option("--export-data", td_export, "write the generated training set (binary)");
    td->add_flag("--noiseless", td_noiseless, "generate noiseless training data");
    add_common(td, o_td);

    auto* ta = app.add_subcommand("train-autoencoder", "train the codebook-learning autoencoder");
    std::string ta_masks = "scma", ta_graph, ta_curve, ta_export;
    double ta_ebn0 = 5.0, ta_density = 1.0, ta_lr = 1e-3;
    std::size_t ta_samples = 200000, ta_batch = 256;
    int ta_enc_layers = 4, ta_enc_width = 32, ta_dec_layers = 5, ta_dec_width = 48;
    ta->add_option("--train-ebn0", ta_ebn0, "training Eb/N0 (dB)");
    ta->add_option("--samples", ta_samples, "total sample presentations");
    ta->add_option("--batch", ta_batch, "mini-batch size");
    ta->add_option("--lr", ta_lr, "Adam learning rate");
    ta->add_option("--masks", ta_masks, "scma | dcma");
    ta->add_option("--density", ta_density, "dcma mask density in (0,1]");
    ta->add_option("--graph", ta_graph, "factor graph file for scma masks");
    ta->add_option("--enc-layers", ta_enc_layers, "encoder hidden layers");
    ta->add_option("--enc-width", ta_enc_width, "encoder hidden width");
    ta->add_option("--dec-layers", ta_dec_layers, "decoder hidden layers");
    ta->add_option("--dec-width", ta_dec_width, "decoder hidden width");
    ta->add_option("--loss-curve", ta_curve, "write per-step losses CSV");
    ta->add_option("--export-codebook", ta_export, "also write the learned codebook JSON");
    add_common(ta, o_ta);

    auto* ec = app.add_subcommand("export-codebook", "extract the learned codebook");
    std::string ec_ckpt;
    ec->add_option("--checkpoint", ec_ckpt, "autoencoder checkpoint")->required();
    add_common(ec, o_ec);

    auto* be = app.add_subcommand("bench", "per-frame decode time comparison");
    std::string be_detectors = "map,logmpa:3,logmpa:5,logmpa:7", be_codebook;
    long long be_frames = 2000, be_warmup = 200;
    double be_ebn0 = 8.0;
    be->add_option("--detectors", be_detectors, "comma list: map,logmpa:<it>,dl:<ckpt>,ae:<ckpt>");
    be->add_option("--frames", be_frames, "timed frames per detector");
    be->add_option("--warmup", be_warmup, "untimed warm-up frames");
    be->add_option("--ebn0", be_ebn0, "operating Eb/N0 (dB)");
    be->add_option("--codebook", be_codebook, "codebook JSON");
    add_common(be, o_be);

    auto* cn = app.add_subcommand("constellation", "superposition constellation export");
    std::string cn_codebook;
    int cn_resource = 0;
    std::size_t cn_samples = 0;
    double cn_ebn0 = 8.0;
    cn->add_option("--codebook", cn_codebook, "codebook JSON");
    cn->add_option("--resource", cn_resource, "resource index in [0, K)");
    cn->add_option("--samples", cn_samples, "also export this many received samples");
    cn->add_option("--ebn0", cn_ebn0, "Eb/N0 (dB) for the received samples");
    add_common(cn, o_cn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 2;
    }

    try {
        if (cx->parsed()) return cmd_complexity(o_cx, cx_its, cx_width, cx_layers);
        if (sw->parsed())
            return cmd_sweep(o_sw, sw_detector, sw_iters, sw_checkpoint, sw_codebook, sw_grid,
                             sw_min_err, sw_min_frames, sw_max_frames, sw_chunk, sw_threads,
                             sw_noiseless, sw_timing);
        if (td->parsed())
            return cmd_train_decoder(o_td, td_groups, td_ebn0, td_samples, td_epochs, td_batch,
                                     td_lr, td_val, td_layers, td_width, td_noiseless,
                                     td_codebook, td_curve, td_export);
        if (ta->parsed())
            return cmd_train_autoencoder(o_ta, ta_ebn0, ta_samples, ta_batch, ta_lr, ta_masks,
                                         ta_density, ta_graph, ta_enc_layers, ta_enc_width,
                                         ta_dec_layers, ta_dec_width, ta_curve, ta_export);
        if (ec->parsed()) return cmd_export_codebook(o_ec, ec_ckpt);
        if (be->parsed())
            return cmd_bench(o_be, be_detectors, be_frames, be_warmup, be_ebn0, be_codebook);
        if (cn->parsed())
            return cmd_constellation(o_cn, cn_codebook, cn_resource, cn_samples, cn_ebn0);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
