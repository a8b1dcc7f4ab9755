// sweep.hpp - Monte-Carlo BER/SER harness, runtime benchmark, constellation
// export and the complexity comparison table
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/complexity.hpp"
#include "scma/detectors.hpp"
#include "scma/dl_decoder.hpp"
#include "scma/rng.hpp"

namespace scma {

enum class DetectorKind { map, logmpa, nn };

struct DetectorSpec {
    DetectorKind kind = DetectorKind::map;
    int iterations = 5;                // logmpa only
    const nn::Network* net = nullptr;  // nn only; non-owning
    std::string name = "map";
};

struct StoppingRule {
    long long min_bit_errors = 100;
    long long min_frames = 1000;
    long long max_frames = 1'000'000;

    void validate() const {
        if (min_bit_errors < 1 || min_frames < 1 || max_frames < min_frames)
            throw std::invalid_argument("StoppingRule: thresholds must be positive and "
                                        "max_frames >= min_frames");
    }
};

struct SweepSpec {
    DetectorSpec detector;
    std::vector<double> ebn0_db;  // strictly increasing
    StoppingRule stop;
    std::uint64_t seed = 1;
    bool noiseless = false;
    bool measure_time = false;  // timing stays out of result files unless asked
    int threads = 1;
    std::size_t chunk_frames = 2048;
    long long map_guard = 1'000'000;

    void validate() const {
        if (ebn0_db.empty()) throw std::invalid_argument("SweepSpec: empty Eb/N0 grid");
        for (size_t i = 1; i < ebn0_db.size(); ++i)
            if (!(ebn0_db[i] > ebn0_db[i - 1]))
                throw std::invalid_argument("SweepSpec: Eb/N0 grid must be strictly increasing");
        stop.validate();
        if (threads < 1) throw std::invalid_argument("SweepSpec: threads must be >= 1");
        if (chunk_frames < 1) throw std::invalid_argument("SweepSpec: chunk_frames must be >= 1");
        if (detector.kind == DetectorKind::nn && detector.net == nullptr)
            throw std::invalid_argument("SweepSpec: nn detector needs a network");
        if (detector.kind == DetectorKind::logmpa && detector.iterations < 1)
            throw std::invalid_argument("SweepSpec: logmpa needs iterations >= 1");
    }
};

struct SweepRow {
    double ebn0_db = 0.0;
    long long frames = 0;
    long long bit_errors = 0;
    long long symbol_errors = 0;
    double ber = 0.0;
    double ser = 0.0;
    double ci95 = 0.0;          // half-width of the 95% interval on BER
    double ns_per_frame = 0.0;  // 0 unless timing was requested
    OperationCount ops;         // per-frame detector cost (logmpa only)
    bool has_ops = false;
};

struct SweepResult {
    std::string detector_name;
    std::uint64_t seed = 0;
    std::vector<SweepRow> rows;
};

namespace detail {

struct ChunkStats {
    long long frames = 0, bit_errors = 0, symbol_errors = 0;
    double detect_ns = 0.0;
    OperationCount ops;
    bool has_ops = false;
};

struct SweepContext {
    const Codebook* cb;
    const ChannelGain* gains;
    const SweepSpec* spec;
    const MapDetector* map = nullptr;
    const LogMpaDetector* mpa = nullptr;
    double power = 0.0;
};

inline ChunkStats run_chunk(const SweepContext& ctx, std::size_t point, std::size_t chunk_index,
                            long long frames, double sigma_c2, double ebn0_linear) {
    const SystemConfig cfg = ctx.cb->config();
    const int m = cfg.bits_per_symbol;
    Rng rng(derive_seed(ctx.spec->seed, point + 1, chunk_index));
    std::uniform_int_distribution<int> sym_dist(0, cfg.codebook_size - 1);
    std::vector<int> truth(static_cast<size_t>(cfg.users));
    std::vector<std::vector<cplx>> cws(static_cast<size_t>(cfg.users));
    ChunkStats st;
    st.frames = frames;

    const bool is_nn = ctx.spec->detector.kind == DetectorKind::nn;
    nn::Matrix batch;
    std::vector<int> batch_truth;
    if (is_nn) {
        batch = nn::Matrix(static_cast<size_t>(frames), static_cast<size_t>(2) * cfg.resources);
        batch_truth.resize(static_cast<size_t>(frames) * cfg.users);
    }

    using clock = std::chrono::steady_clock;
    for (long long f = 0; f < frames; ++f) {
        for (int j = 0; j < cfg.users; ++j) {
            truth[j] = sym_dist(rng);
            cws[j] = ctx.cb->codeword(j, truth[j]);
        }
        auto clean = superpose(cws, *ctx.gains);
        ReceivedSignal rx;
        if (ctx.spec->noiseless)
            rx = without_noise(clean);
        else
            rx = add_awgn(clean, ebn0_linear, cfg, ctx.power, rng);

        if (is_nn) {
            std::copy(rx.y.begin(), rx.y.end(), batch.row(static_cast<size_t>(f)));
            for (int j = 0; j < cfg.users; ++j)
                batch_truth[static_cast<size_t>(f) * cfg.users + j] = truth[j];
            continue;
        }

        SymbolDecision dec;
        const auto t0 = clock::now();
        if (ctx.spec->detector.kind == DetectorKind::map) {
            dec = ctx.map->detect(rx.y, sigma_c2);
        } else {
            auto r = ctx.mpa->detect(rx.y, sigma_c2, ctx.spec->detector.iterations);
            dec = std::move(r.decision);
            if (!st.has_ops) {
                st.ops = r.ops;
                st.has_ops = true;
            }
        }
        if (ctx.spec->measure_time)
            st.detect_ns += std::chrono::duration<double, std::nano>(clock::now() - t0).count();
        for (int j = 0; j < cfg.users; ++j) {
            if (dec.symbols[j] != truth[j]) {
                ++st.symbol_errors;
                const int diff = dec.symbols[j] ^ truth[j];
                st.bit_errors += __builtin_popcount(static_cast<unsigned>(diff));
            }
        }
    }

    if (is_nn) {
        const auto t0 = clock::now();
        nn::Matrix probs = ctx.spec->detector.net->infer(batch);
        if (ctx.spec->measure_time)
            st.detect_ns += std::chrono::duration<double, std::nano>(clock::now() - t0).count();
        for (long long f = 0; f < frames; ++f) {
            for (int j = 0; j < cfg.users; ++j) {
                int sym = 0;
                for (int b = 0; b < m; ++b) {
                    const double p = probs(static_cast<size_t>(f),
                                           static_cast<size_t>(j) * m + b);
                    sym = (sym << 1) | (p >= 0.5 ? 1 : 0);
                }
                const int t = batch_truth[static_cast<size_t>(f) * cfg.users + j];
                if (sym != t) {
                    ++st.symbol_errors;
                    st.bit_errors += __builtin_popcount(static_cast<unsigned>(sym ^ t));
                }
            }
        }
    }
    return st;
}

}  // namespace detail

// Monte-Carlo sweep. Frames are drawn in fixed-size chunks with per-chunk
// derived seeds and the stopping rule is evaluated over the chunk-ordered
// prefix, so the result is identical regardless of the worker count.
inline SweepResult run_sweep(const Codebook& cb, const ChannelGain& gains,
                             const SweepSpec& spec) {
    spec.validate();
    cb.validate();
    const SystemConfig cfg = cb.config();
    detail::SweepContext ctx;
    ctx.cb = &cb;
    ctx.gains = &gains;
    ctx.spec = &spec;
    ctx.power = ensemble_power(cb, gains);

    std::optional<MapDetector> map;
    std::optional<LogMpaDetector> mpa;
    if (spec.detector.kind == DetectorKind::map) {
        map.emplace(cb, gains, spec.map_guard);
        ctx.map = &*map;
    } else if (spec.detector.kind == DetectorKind::logmpa) {
        mpa.emplace(cb, gains);
        ctx.mpa = &*mpa;
    } else if (spec.detector.net->input_width() != static_cast<size_t>(2) * cfg.resources ||
               spec.detector.net->output_width() != static_cast<size_t>(cfg.frame_bits())) {
        throw std::invalid_argument("run_sweep: network width does not match the codebook");
    }

    SweepResult result;
    result.detector_name = spec.detector.name;
    result.seed = spec.seed;

    for (std::size_t p = 0; p < spec.ebn0_db.size(); ++p) {
        const double ebn0_lin = ebn0_db_to_linear(spec.ebn0_db[p]);
        const double snr = ebn0_to_snr(ebn0_lin, cfg);
        // detectors need a positive variance even in the noiseless sanity mode
        const double sigma_c2 = spec.noiseless
                                    ? 1.0
                                    : noise_var_per_component(ctx.power, snr, cfg.resources);

        SweepRow row;
        row.ebn0_db = spec.ebn0_db[p];
        double detect_ns = 0.0;
        std::size_t next_chunk = 0;
        bool done = false;
        while (!done) {
            const int wave = std::max(1, spec.threads);
            std::vector<std::future<detail::ChunkStats>> futs;
            for (int w = 0; w < wave && !done; ++w) {
                const long long remaining = spec.stop.max_frames - row.frames -
                                            static_cast<long long>(w) *
                                                static_cast<long long>(spec.chunk_frames);
                if (remaining <= 0) break;
                const long long n = std::min<long long>(spec.chunk_frames, remaining);
                const std::size_t idx = next_chunk + w;
                futs.push_back(std::async(wave > 1 ? std::launch::async : std::launch::deferred,
                                          [&, idx, n] {
                                              return detail::run_chunk(ctx, p, idx, n, sigma_c2,
                                                                       ebn0_lin);
                                          }));
            }
            if (futs.empty()) break;
            for (auto& f : futs) {
                detail::ChunkStats st = f.get();
                // chunks scheduled past the stopping point are joined but not
                // counted, so totals equal the chunk-ordered prefix for any
                // worker count
                if (done) continue;
                row.frames += st.frames;
                row.bit_errors += st.bit_errors;
                row.symbol_errors += st.symbol_errors;
                detect_ns += st.detect_ns;
                if (st.has_ops && !row.has_ops) {
                    row.ops = st.ops;
                    row.has_ops = true;
                }
                ++next_chunk;
                if ((row.frames >= spec.stop.min_frames &&
                     row.bit_errors >= spec.stop.min_bit_errors) ||
                    row.frames >= spec.stop.max_frames)
                    done = true;
            }
        }
        const double total_bits = static_cast<double>(row.frames) * cfg.frame_bits();
        const double total_syms = static_cast<double>(row.frames) * cfg.users;
        row.ber = row.frames ? static_cast<double>(row.bit_errors) / total_bits : 0.0;
        row.ser = row.frames ? static_cast<double>(row.symbol_errors) / total_syms : 0.0;
        row.ci95 = row.frames ? 1.96 * std::sqrt(std::max(0.0, row.ber * (1.0 - row.ber)) /
                                                 total_bits)
                              : 0.0;
        row.ns_per_frame = (spec.measure_time && row.frames)
                               ? detect_ns / static_cast<double>(row.frames)
                               : 0.0;
        result.rows.push_back(row);
    }
    return result;
}

// ---------------------------------------------------------------------------
// CSV output (schema v1). Fixed column prefix; the three op-count columns are
// appended only when the detector reports per-frame counts.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
    out << "# scma-lab sweep csv v1 detector=" << r.detector_name << " seed=" << r.seed << "\n";
    const bool ops = !r.rows.empty() && r.rows.front().has_ops;
    out << "ebn0_db,frames,bit_err,sym_err,ber,ser,ci95,ns_per_frame";
    if (ops) out << ",mul_ops,add_ops,logexp_ops";
    out << "\n";
    for (const auto& row : r.rows) {
        out << format_double(row.ebn0_db) << ',' << row.frames << ',' << row.bit_errors << ','
            << row.symbol_errors << ',' << format_double(row.ber) << ','
            << format_double(row.ser) << ',' << format_double(row.ci95) << ','
            << format_double(row.ns_per_frame);
        if (ops)
            out << ',' << row.ops.multiplications << ',' << row.ops.additions << ','
                << row.ops.log_exp_ops;
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// complexity comparison table
// ---------------------------------------------------------------------------

struct ComplexityRow {
    std::string name;
    OperationCount ops;
    long long normalized = 0;
    double dnn_reduction_pct = 0.0;  // complexity saved by the network decoder
    bool has_reduction = false;
};

inline std::vector<ComplexityRow> compare_complexity(const SystemConfig& cfg,
                                                     const std::vector<int>& iterations,
                                                     const DecoderArch& arch,
                                                     const ComplexityWeights& w =
                                                         ComplexityWeights{}) {
    const OperationCount dnn = count_dnn_ops(arch.hidden_width, arch.hidden_layers,
                                             cfg.resources, cfg.users);
    const long long dnn_norm = normalize_complexity(dnn, w);
    std::vector<ComplexityRow> rows;
    for (int it : iterations) {
        ComplexityRow r;
        r.name = "logmpa_it" + std::to_string(it);
        r.ops = count_logmpa_ops(cfg, it);
        r.normalized = normalize_complexity(r.ops, w);
        r.dnn_reduction_pct =
            100.0 * (1.0 - static_cast<double>(dnn_norm) / static_cast<double>(r.normalized));
        r.has_reduction = true;
        rows.push_back(r);
    }
    ComplexityRow d;
    d.name = "dl_scma";
    d.ops = dnn;
    d.normalized = dnn_norm;
    rows.push_back(d);
    return rows;
}

inline void write_complexity_csv(std::ostream& out, const std::vector<ComplexityRow>& rows) {
    out << "# scma-lab complexity csv v1\n";
    out << "detector,multiplications,additions,log_exp,normalized,dnn_reduction_pct\n";
    for (const auto& r : rows) {
        out << r.name << ',' << r.ops.multiplications << ',' << r.ops.additions << ','
            << r.ops.log_exp_ops << ',' << r.normalized << ',';
        if (r.has_reduction) {
            std::ostringstream os;
            os << std::fixed << std::setprecision(1) << r.dnn_reduction_pct;
            out << os.str();
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// runtime benchmark
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string name;
    long long frames = 0;
    double ns_per_frame = 0.0;
    std::uint64_t decisions_hash = 0;  // seed-determined; timing is not
};

inline std::vector<BenchRow> benchmark_runtime(const Codebook& cb, const ChannelGain& gains,
                                               const std::vector<DetectorSpec>& detectors,
                                               long long n_frames, long long warmup,
                                               double ebn0_db, std::uint64_t seed) {
    if (n_frames < 1) throw std::invalid_argument("benchmark_runtime: need frames >= 1");
    const SystemConfig cfg = cb.config();
    const double power = ensemble_power(cb, gains);
    const double snr = ebn0_to_snr(ebn0_db_to_linear(ebn0_db), cfg);
    const double sigma_c2 = noise_var_per_component(power, snr, cfg.resources);

    // one shared frame set so every detector sees identical inputs
    const long long total = warmup + n_frames;
    std::vector<double> frames(static_cast<size_t>(total) * 2 * cfg.resources);
    Rng rng(derive_seed(seed, 0xbe9c));
    std::uniform_int_distribution<int> sym_dist(0, cfg.codebook_size - 1);
    std::vector<std::vector<cplx>> cws(static_cast<size_t>(cfg.users));
    for (long long f = 0; f < total; ++f) {
        for (int j = 0; j < cfg.users; ++j) cws[j] = cb.codeword(j, sym_dist(rng));
        auto rx = add_awgn(superpose(cws, gains), ebn0_db_to_linear(ebn0_db), cfg, power, rng);
        std::copy(rx.y.begin(), rx.y.end(),
                  frames.begin() + static_cast<size_t>(f) * 2 * cfg.resources);
    }

    auto fnv = [](std::uint64_t h, std::uint64_t v) {
        h ^= v;
        return h * 1099511628211ULL;
    };

    std::vector<BenchRow> rows;
    for (const auto& d : detectors) {
        std::optional<MapDetector> map;
        std::optional<LogMpaDetector> mpa;
        if (d.kind == DetectorKind::map)
            map.emplace(cb, gains);
        else if (d.kind == DetectorKind::logmpa)
            mpa.emplace(cb, gains);
        else if (d.net == nullptr)
            throw std::invalid_argument("benchmark_runtime: nn detector needs a network");

        BenchRow row;
        row.name = d.name;
        row.frames = n_frames;
        row.decisions_hash = 14695981039346656037ULL;
        using clock = std::chrono::steady_clock;
        double ns = 0.0;
        const std::size_t w = static_cast<size_t>(2) * cfg.resources;
        nn::Matrix one(1, w);
        for (long long f = 0; f < total; ++f) {
            std::span<const double> y(frames.data() + static_cast<size_t>(f) * w, w);
            const bool timed = f >= warmup;
            const auto t0 = clock::now();
            std::vector<int> symbols;
            if (d.kind == DetectorKind::map) {
                symbols = map->detect(y, sigma_c2).symbols;
            } else if (d.kind == DetectorKind::logmpa) {
                symbols = mpa->detect(y, sigma_c2, d.iterations).decision.symbols;
            } else {
                std::copy(y.begin(), y.end(), one.row(0));
                nn::Matrix p = d.net->infer(one);
                symbols.assign(static_cast<size_t>(cfg.users), 0);
                for (int j = 0; j < cfg.users; ++j)
                    for (int b = 0; b < cfg.bits_per_symbol; ++b)
                        symbols[j] = (symbols[j] << 1) |
                                     (p(0, static_cast<size_t>(j) * cfg.bits_per_symbol + b) >= 0.5
                                          ? 1
                                          : 0);
            }
            if (timed) {
                ns += std::chrono::duration<double, std::nano>(clock::now() - t0).count();
                for (int s : symbols)
                    row.decisions_hash = fnv(row.decisions_hash, static_cast<std::uint64_t>(s));
            }
        }
        row.ns_per_frame = ns / static_cast<double>(n_frames);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string hardware_descriptor() {
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) return line.substr(pos + 2);
        }
    }
    return "unknown cpu";
}

// ---------------------------------------------------------------------------
// constellation projections
// ---------------------------------------------------------------------------

struct ConstellationPoint {
    double re = 0.0, im = 0.0;
    std::string label;  // "u2=1;u3=0;..." for codebook points, empty for samples
};

// All superposition values the colliding users can produce on one resource:
// the joint symbol odometer runs over the occupying users, first user most
// significant.
inline std::vector<ConstellationPoint> constellation_projection(const Codebook& cb,
                                                                const ChannelGain& gains,
                                                                int resource) {
    if (resource < 0 || resource >= cb.resources())
        throw std::invalid_argument("constellation_projection: resource index out of range");
    const auto users = cb.graph().resource_users(resource);
    long long combos = 1;
    for (size_t i = 0; i < users.size(); ++i) combos *= cb.size();
    std::vector<ConstellationPoint> pts;
    pts.reserve(static_cast<size_t>(combos));
    for (long long c = 0; c < combos; ++c) {
        long long rem = c;
        std::vector<int> sym(users.size());
        for (size_t t = users.size(); t-- > 0;) {
            sym[t] = static_cast<int>(rem % cb.size());
            rem /= cb.size();
        }
        double re = 0.0, im = 0.0;
        std::string label;
        for (size_t t = 0; t < users.size(); ++t) {
            const cplx v = cb.codeword(users[t], sym[t])[resource];
            re += v.real();
            im += v.imag();
            if (!label.empty()) label += ';';
            label += "u" + std::to_string(users[t]) + "=" + std::to_string(sym[t]);
        }
        pts.push_back({re * gains.g[2 * resource], im * gains.g[2 * resource + 1], label});
    }
    return pts;
}

inline std::vector<ConstellationPoint> received_samples(const Codebook& cb,
                                                        const ChannelGain& gains, int resource,
                                                        std::size_t n, double ebn0_db,
                                                        Rng& rng) {
    if (resource < 0 || resource >= cb.resources())
        throw std::invalid_argument("received_samples: resource index out of range");
    const SystemConfig cfg = cb.config();
    const double power = ensemble_power(cb, gains);
    std::uniform_int_distribution<int> sym_dist(0, cfg.codebook_size - 1);
    std::vector<std::vector<cplx>> cws(static_cast<size_t>(cfg.users));
    std::vector<ConstellationPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < cfg.users; ++j) cws[j] = cb.codeword(j, sym_dist(rng));
        auto rx = add_awgn(superpose(cws, gains), ebn0_db_to_linear(ebn0_db), cfg, power, rng);
        pts.push_back({rx.y[2 * resource], rx.y[2 * resource + 1], ""});
    }
    return pts;
}

inline void write_constellation_csv(std::ostream& out,
                                    const std::vector<ConstellationPoint>& codebook_pts,
                                    const std::vector<ConstellationPoint>& sample_pts) {
    out << "# scma-lab constellation csv v1\n";
    out << "source,re,im,label\n";
    for (const auto& p : codebook_pts)
        out << "codebook," << format_double(p.re) << ',' << format_double(p.im) << ',' << p.label
            << "\n";
    for (const auto& p : sample_pts)
        out << "sample," << format_double(p.re) << ',' << format_double(p.im) << ",\n";
}

}  // namespace scma
