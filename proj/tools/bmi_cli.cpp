// bmi: mask generation, encoding, decoding, metrics and benchmarking.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bmi/container_io.hpp"
#include "bmi/encoder.hpp"
#include "bmi/mask_gen.hpp"
#include "bmi/metrics.hpp"
#include "bmi/solvers.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitDivergence = 5;

int exit_code_for(bmi::ErrorCode code) {
    using bmi::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument:
            return kExitUsage;
        case ErrorCode::Io:
        case ErrorCode::Malformed:
        case ErrorCode::BadMagic:
        case ErrorCode::UnsupportedVersion:
        case ErrorCode::UnsupportedDepth:
            return kExitIo;
        case ErrorCode::NonFiniteState:
            return kExitDivergence;
        default:
            return kExitInvariant;
    }
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bmi::BlockGrid parse_grid(const std::string& text) {
    unsigned rows = 0, cols = 0;
    char sep = 0, extra = 0;
    if (std::sscanf(text.c_str(), "%u%c%u%c", &rows, &sep, &cols, &extra) != 3 || (sep != 'x' && sep != 'X'))
        throw UsageError("grid must look like RxC, got '" + text + "'");
    if (rows == 0 || cols == 0 || rows > 0xffffu || cols > 0xffffu)
        throw UsageError("grid rows and cols must be in 1..65535");
    return bmi::BlockGrid(rows, cols);
}

std::vector<bmi::Resolution> parse_resolutions(const std::string& text) {
    std::vector<bmi::Resolution> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        unsigned long h = 0, w = 0;
        char sep = 0, extra = 0;
        const int n = std::sscanf(item.c_str(), "%lu%c%lu%c", &h, &sep, &w, &extra);
        if (n == 1)
            w = h;
        else if (n != 3 || (sep != 'x' && sep != 'X'))
            throw UsageError("resolution must be N or HxW, got '" + item + "'");
        if (h == 0 || w == 0) throw UsageError("resolution must be positive");
        out.push_back({h, w});
    }
    if (out.empty()) throw UsageError("no resolutions given");
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("not a number: '" + item + "'");
        }
    }
    if (out.empty()) throw UsageError("empty number list");
    return out;
}

// --config: key=value lines become "--key value" tokens placed right after
// the subcommand name, so anything given on the command line comes later
// and wins.
std::vector<std::string> config_tokens(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw bmi::Error(bmi::ErrorCode::Io, "cannot open config " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value == "true") {
            tokens.push_back("--" + key);
        } else if (value != "false") {
            tokens.push_back("--" + key);
            tokens.push_back(value);
        }
    }
    return tokens;
}

std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::optional<std::string> path;
        std::size_t span = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            span = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            span = 1;
        }
        if (!path) continue;
        auto tokens = config_tokens(*path);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + span));
        // first non-option token is the subcommand
        auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
        const auto at = sub == args.end() ? args.begin() : sub + 1;
        args.insert(at, tokens.begin(), tokens.end());
        break;
    }
    return args;
}

// Runs fn(i) for i in [0, count) on at most `jobs` threads. Every item is
// attempted; the first failure is rethrown afterwards.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex lock;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard g(lock);
                if (!first) first = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Regular files in `dir` with one of `exts` (any extension but .dims when
// empty), sorted by name.
std::vector<fs::path> list_inputs(const fs::path& dir, const std::vector<std::string>& exts) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".dims") continue;
        if (!exts.empty() && std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

// "out.bmim" with channel 1 of 3 -> "out.c1.bmim"
fs::path channel_path(const fs::path& base, std::size_t channel) {
    fs::path p = base;
    p.replace_extension(".c" + std::to_string(channel) + base.extension().string());
    return p;
}

// ---------------------------------------------------------------------------

struct MaskGenArgs {
    std::size_t height = 0, width = 0;
    float density = 0.5f;
    std::optional<std::uint64_t> seed;
    std::optional<int> constant;
    std::string out;
};

int run_mask_gen(const MaskGenArgs& a) {
    bmi::Mask mask;
    if (a.constant) {
        if (*a.constant != 0 && *a.constant != 1) throw UsageError("--constant must be 0 or 1");
        if (a.height == 0 || a.width == 0) throw bmi::Error(bmi::ErrorCode::ZeroArea, "mask area is zero");
        mask = bmi::Mask(a.height, a.width,
                         std::vector<std::uint8_t>(a.height * a.width, static_cast<std::uint8_t>(*a.constant)));
    } else {
        if (!a.seed) throw UsageError("--seed is required unless --constant is given");
        mask = bmi::generate({a.height, a.width, a.density, *a.seed});
    }
    bmi::write_mask(mask, a.out);
    return 0;
}

struct EncodeArgs {
    std::string image, mask, grid, out;
    bool pad = false, embed_mask = false, wide = false;
    std::size_t jobs = default_jobs();
};

void encode_file(const fs::path& image_path, const bmi::Mask& mask, const bmi::BlockGrid& grid,
                 const bmi::EncodeOptions& opt, const fs::path& out) {
    const auto channels = bmi::read_channels(image_path);
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
        const auto m = bmi::encode(channels[ch], mask, grid, opt);
        bmi::write_measurement(m, channels.size() == 1 ? out : channel_path(out, ch));
    }
}

int run_encode(const EncodeArgs& a) {
    const auto grid = parse_grid(a.grid);
    const auto mask = bmi::read_mask(a.mask);
    bmi::EncodeOptions opt;
    opt.pad = a.pad;
    opt.embed_mask = a.embed_mask;
    opt.wide_accumulator = a.wide;
    if (!fs::is_directory(a.image)) {
        encode_file(a.image, mask, grid, opt, a.out);
        return 0;
    }
    const auto inputs = list_inputs(a.image, {});
    fs::create_directories(a.out);
    parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
        encode_file(inputs[i], mask, grid, opt, fs::path(a.out) / inputs[i].stem().concat(".bmim"));
    });
    return 0;
}

struct DecodeArgs {
    std::vector<std::string> measurements;
    std::string mask, algorithm = "gap", preset, out, trace;
    std::optional<std::size_t> iters, tv_iters;
    std::optional<std::string> eta;
    std::optional<double> tv_weight, rho, stop_tol;
    bool tolerant = false, no_clamp = false;
    std::size_t jobs = default_jobs();
};

bmi::SolverConfig solver_config(const DecodeArgs& a) {
    bmi::SolverConfig cfg;
    if (a.preset == "stages10")
        cfg = bmi::SolverConfig::stages10();
    else if (!a.preset.empty())
        throw UsageError("unknown preset '" + a.preset + "'");
    if (a.algorithm == "gap")
        cfg.algorithm = bmi::Algorithm::Gap;
    else if (a.algorithm == "admm")
        cfg.algorithm = bmi::Algorithm::Admm;
    else
        throw UsageError("algorithm must be gap or admm");
    if (a.iters) cfg.max_iters = *a.iters;
    if (a.eta) cfg.eta_schedule = parse_doubles(*a.eta);
    if (a.tv_weight) cfg.tv_weight = *a.tv_weight;
    if (a.tv_iters) cfg.tv_inner_iters = *a.tv_iters;
    if (a.rho) cfg.rho = *a.rho;
    if (a.stop_tol) cfg.stop_tol = *a.stop_tol;
    if (a.tolerant) cfg.zero_coverage = bmi::ZeroCoverage::Tolerant;
    if (a.no_clamp) cfg.clamp_final = false;
    cfg.validate();
    return cfg;
}

bmi::SolveResult decode_one(const fs::path& path, const std::optional<bmi::Mask>& override_mask,
                            const bmi::SolverConfig& cfg) {
    const auto m = bmi::read_measurement(path);
    return bmi::decode(m, override_mask ? *override_mask : bmi::resolve_mask(m), cfg);
}

void write_trace(const fs::path& path, const std::vector<bmi::TraceRow>& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw bmi::Error(bmi::ErrorCode::Io, "cannot open " + path.string() + " for writing");
    bmi::write_trace_csv(out, trace);
}

int run_decode(const DecodeArgs& a) {
    const auto cfg = solver_config(a);
    std::optional<bmi::Mask> mask;
    if (!a.mask.empty()) mask = bmi::read_mask(a.mask);

    if (a.measurements.size() == 1 && fs::is_directory(a.measurements.front())) {
        const auto inputs = list_inputs(a.measurements.front(), {".bmim"});
        fs::create_directories(a.out);
        parallel_for(inputs.size(), a.jobs, [&](std::size_t i) {
            const auto r = decode_one(inputs[i], mask, cfg);
            bmi::write_image(r.image, fs::path(a.out) / inputs[i].stem().concat(".f32"));
            if (!a.trace.empty()) {
                fs::create_directories(a.trace);
                write_trace(fs::path(a.trace) / inputs[i].stem().concat(".csv"), r.trace);
            }
        });
        return 0;
    }

    // Several measurements are channels of one image, recombined in order.
    std::vector<bmi::Image> channels(a.measurements.size());
    std::vector<std::vector<bmi::TraceRow>> traces(a.measurements.size());
    parallel_for(a.measurements.size(), a.jobs, [&](std::size_t i) {
        auto r = decode_one(a.measurements[i], mask, cfg);
        channels[i] = std::move(r.image);
        traces[i] = std::move(r.trace);
    });
    bmi::write_channels(channels, a.out);
    if (!a.trace.empty()) {
        if (traces.size() == 1)
            write_trace(a.trace, traces.front());
        else
            for (std::size_t i = 0; i < traces.size(); ++i) write_trace(channel_path(a.trace, i), traces[i]);
    }
    return 0;
}

struct MetricsArgs {
    std::string reference, test;
};

int run_metrics(const MetricsArgs& a) {
    const auto ref = bmi::read_channels(a.reference);
    const auto test = bmi::read_channels(a.test);
    if (ref.size() != test.size())
        throw bmi::Error(bmi::ErrorCode::DimensionMismatch, "channel counts differ");
    std::ostringstream out;
    out.precision(10);
    out << "psnr_db,ssim\n";
    for (std::size_t ch = 0; ch < ref.size(); ++ch)
        out << bmi::psnr(ref[ch], test[ch]) << ',' << bmi::ssim(ref[ch], test[ch]) << '\n';
    std::cout << out.str();
    return 0;
}

struct BenchArgs {
    std::string resolutions = "512,1024,2048,4096", grid = "4x4", out = "-";
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::size_t evict_mb = bmi::kBenchEvictBytes >> 20;
};

int run_bench(const BenchArgs& a) {
    const auto res = parse_resolutions(a.resolutions);
    const auto rows = bmi::bench_encode(res, parse_grid(a.grid), a.repeats, a.seed, a.evict_mb << 20);
    if (a.out == "-") {
        bmi::write_bench_csv(std::cout, rows);
        return 0;
    }
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw bmi::Error(bmi::ErrorCode::Io, "cannot open " + a.out + " for writing");
    bmi::write_bench_csv(out, rows);
    return 0;
}

void error_line(std::string_view code, const std::string& message) {
    std::string one = message;
    std::replace(one.begin(), one.end(), '\n', ' ');
    std::cerr << "ERROR " << code << ": " << one << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Block-modulating compressive imaging toolkit", "bmi"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--config", "key=value file; command-line flags take precedence");

    MaskGenArgs mg;
    auto* mask_gen = app.add_subcommand("mask-gen", "Generate a binary mask");
    mask_gen->add_option("--height", mg.height, "Mask height")->required();
    mask_gen->add_option("--width", mg.width, "Mask width")->required();
    mask_gen->add_option("--density", mg.density, "Fraction of open pixels")->capture_default_str();
    mask_gen->add_option("--seed", mg.seed, "Generator seed");
    mask_gen->add_option("--constant", mg.constant, "Write an all-0 or all-1 mask instead");
    mask_gen->add_option("--out", mg.out, "Output .bmik file")->required();

    EncodeArgs en;
    auto* encode = app.add_subcommand("encode", "Modulate and block-sum an image (or a directory of images)");
    encode->add_option("--image", en.image, "Input image or directory")->required();
    encode->add_option("--mask", en.mask, "Mask file (.bmik)")->required();
    encode->add_option("--grid", en.grid, "Block grid RxC")->required();
    encode->add_flag("--pad", en.pad, "Zero-pad when the grid does not divide the image");
    encode->add_flag("--embed-mask", en.embed_mask, "Store the mask bitmap in the measurement");
    encode->add_flag("--wide", en.wide, "Accumulate in double precision");
    encode->add_option("--jobs", en.jobs, "Worker threads for directory input")->capture_default_str();
    encode->add_option("--out", en.out, "Output .bmim file or directory")->required();

    DecodeArgs de;
    auto* decode = app.add_subcommand("decode", "Reconstruct an image from a measurement");
    decode->add_option("--measurement", de.measurements, "Measurement file(s) or a directory")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    decode->add_option("--mask", de.mask, "Override the mask named by the measurement");
    decode->add_option("--algorithm", de.algorithm, "gap or admm")->capture_default_str();
    decode->add_option("--preset", de.preset, "stages10");
    decode->add_option("--iters", de.iters, "Maximum iterations");
    decode->add_option("--eta", de.eta, "Projection eta, or a comma-separated per-iteration schedule");
    decode->add_option("--tv-weight", de.tv_weight, "TV denoiser weight");
    decode->add_option("--tv-iters", de.tv_iters, "TV inner iterations");
    decode->add_option("--rho", de.rho, "ADMM penalty");
    decode->add_option("--stop-tol", de.stop_tol, "Relative change stopping tolerance");
    decode->add_flag("--tolerant", de.tolerant, "Allow positions no block observes");
    decode->add_flag("--no-clamp", de.no_clamp, "Do not clamp the output to [0,1]");
    decode->add_option("--jobs", de.jobs, "Worker threads")->capture_default_str();
    decode->add_option("--trace", de.trace, "Write per-iteration CSV");
    decode->add_option("--out", de.out, "Output image or directory")->required();

    MetricsArgs me;
    auto* metrics = app.add_subcommand("metrics", "Print psnr_db,ssim for an image pair");
    metrics->add_option("--reference", me.reference, "Reference image")->required();
    metrics->add_option("--test", me.test, "Test image")->required();

    BenchArgs be;
    auto* bench = app.add_subcommand("bench", "Time encode across resolutions");
    bench->add_option("--resolutions", be.resolutions, "Comma list of N or HxW")->capture_default_str();
    bench->add_option("--grid", be.grid, "Block grid RxC")->capture_default_str();
    bench->add_option("--repeats", be.repeats, "Timed runs per resolution")->capture_default_str();
    bench->add_option("--seed", be.seed, "Input generator seed")->capture_default_str();
    bench->add_option("--evict-mb", be.evict_mb, "Memory read between input generation and timing (0 = off)")
        ->capture_default_str();
    bench->add_option("--out", be.out, "CSV path, - for stdout")->capture_default_str();

    try {
        auto args = expand_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (mask_gen->parsed()) return run_mask_gen(mg);
        if (encode->parsed()) return run_encode(en);
        if (decode->parsed()) return run_decode(de);
        if (metrics->parsed()) return run_metrics(me);
        if (bench->parsed()) return run_bench(be);
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line("Usage", e.what());
        return kExitUsage;
    } catch (const UsageError& e) {
        error_line("Usage", e.what());
        return kExitUsage;
    } catch (const bmi::Error& e) {
        error_line(bmi::to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        error_line("Io", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        error_line("Internal", e.what());
        return 1;
    }
}
