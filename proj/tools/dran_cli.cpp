// dran: region-adaptive normalization on images.
//
//   dran transfer --source S --reference R --source-mask MS --reference-mask MR
//                 --config CFG --out OUT [--theta PATH | --uniform-gate]
//                 [--gate-mode scalar|spatial] [--resize bilinear|nearest]
//   dran stats --image IMG --mask M --config CFG [--out PATH]
//   dran check [--seed N] [--verbose]
//   dran gradcheck [--seed N] [--trials N] [--report PATH]
//   dran pfdm A B --mask-a MA --mask-b MB [--regions 1,2,3]
//
// Exit status: 0 success, 1 check/gradcheck failure, 2 usage or input error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dran/autodiff.hpp"
#include "dran/checks.hpp"
#include "dran/config.hpp"
#include "dran/dran.hpp"
#include "dran/error.hpp"
#include "dran/image_io.hpp"
#include "dran/kernels.hpp"
#include "dran/losses.hpp"
#include "dran/mask_geometry.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct TransferArgs {
    std::string source, reference, source_mask, reference_mask, config, out, theta;
    bool uniform_gate = false;
    std::string gate_mode;
    std::string resize;
};

struct StatsArgs {
    std::string image, mask, config, out;
};

struct CheckArgs {
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct GradcheckArgs {
    std::uint64_t seed = 0;
    int trials = 10;
    std::string report;
};

struct PfdmArgs {
    std::string a, b, mask_a, mask_b;
    std::vector<int> regions;
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    const std::string temp = path + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary);
        if (!out) throw dran::IoError("cannot write " + path);
        out << text;
        if (!out) throw dran::IoError("cannot write " + path);
    }
    if (std::rename(temp.c_str(), path.c_str()) != 0) {
        std::remove(temp.c_str());
        throw dran::IoError("cannot move output into place: " + path);
    }
}

void require_same_dims(const dran::FeatureMap& image, const dran::SegMask& mask, const std::string& what) {
    if (!mask.matches(image)) {
        throw dran::InvalidArgument(what + " mask is " + std::to_string(mask.height()) + "x" +
                                    std::to_string(mask.width()) + " but the image is " +
                                    std::to_string(image.height()) + "x" + std::to_string(image.width()));
    }
}

int run_transfer(const TransferArgs& args) {
    const dran::FeatureMap source = dran::io::read_rgb_png(args.source);
    const dran::FeatureMap reference = dran::io::read_rgb_png(args.reference);
    const dran::SegMask source_mask = dran::io::read_mask_png(args.source_mask);
    const dran::SegMask reference_mask = dran::io::read_mask_png(args.reference_mask);
    require_same_dims(source, source_mask, "source");
    require_same_dims(reference, reference_mask, "reference");

    dran::DranConfig cfg = dran::DranConfig::load(args.config);
    if (!args.gate_mode.empty()) cfg.gate = dran::parse_gate_mode(args.gate_mode);
    if (!args.resize.empty()) cfg.resize = dran::parse_resize_mode(args.resize);

    dran::GateSet gates;
    if (!args.theta.empty() && !args.uniform_gate) {
        gates = dran::load_gates(args.theta);
        if (!args.gate_mode.empty()) dran::set_gate_mode(gates, cfg.gate);
        dran::validate_gates(gates, cfg, source.channels());
    } else {
        gates = dran::zero_gates(cfg, source.channels());
    }

    const dran::DranResult result =
        dran::dran_forward(source, reference, source_mask, reference_mask, cfg, gates);
    for (const std::string& warning : result.warnings) std::cerr << "warning: " << warning << '\n';
    dran::io::write_rgb_png(args.out, result.output);
    return kExitOk;
}

int run_stats(const StatsArgs& args) {
    const dran::FeatureMap image = dran::io::read_rgb_png(args.image);
    const dran::SegMask mask = dran::io::read_mask_png(args.mask);
    require_same_dims(image, mask, "image");
    const dran::DranConfig cfg = dran::DranConfig::load(args.config);
    write_text(args.out, dran::region_stats_json(image, mask, cfg).dump(2) + "\n");
    return kExitOk;
}

int run_check(const CheckArgs& args) {
    const dran::CheckReport report = dran::run_invariant_suite(args.seed);
    for (const dran::PropertyResult& p : report.properties) {
        if (args.verbose || !p.pass) {
            std::printf("%-4s %-34s instances=%d max_err=%.3e tol=%.1e\n", p.pass ? "PASS" : "FAIL",
                        p.name.c_str(), p.instances, p.max_error, p.tolerance);
        }
    }
    const auto failed = std::count_if(report.properties.begin(), report.properties.end(),
                                      [](const dran::PropertyResult& p) { return !p.pass; });
    std::printf("check seed=%llu: %zu properties, %td failed\n",
                static_cast<unsigned long long>(args.seed), report.properties.size(), failed);
    return report.pass() ? kExitOk : kExitFailed;
}

int run_gradcheck(const GradcheckArgs& args) {
    const dran::GradcheckReport report = dran::gradcheck_report(args.seed, args.trials);
    write_text(args.report, report.to_json().dump(2) + "\n");
    std::fprintf(stderr, "gradcheck seed=%llu trials=%d max_rel_err f=%.3e v=%.3e theta=%.3e: %s\n",
                 static_cast<unsigned long long>(args.seed), args.trials, report.f.max_rel_err,
                 report.v.max_rel_err, report.theta.max_rel_err, report.pass ? "pass" : "FAIL");
    return report.pass ? kExitOk : kExitFailed;
}

int run_pfdm(const PfdmArgs& args) {
    const dran::FeatureMap a = dran::io::read_rgb_png(args.a);
    const dran::FeatureMap b = dran::io::read_rgb_png(args.b);
    const dran::SegMask mask_a = dran::io::read_mask_png(args.mask_a);
    const dran::SegMask mask_b = dran::io::read_mask_png(args.mask_b);
    require_same_dims(a, mask_a, "first");
    require_same_dims(b, mask_b, "second");
    std::vector<int> regions = args.regions;
    if (regions.empty()) {
        const auto in_a = dran::region_set(mask_a);
        const auto in_b = dran::region_set(mask_b);
        std::set_intersection(in_a.begin(), in_a.end(), in_b.begin(), in_b.end(), std::back_inserter(regions));
        if (regions.empty()) throw dran::InvalidArgument("the two masks share no region");
    }
    std::printf("%.6f\n", dran::pfdm(a, b, mask_a, mask_b, regions));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detailed region-adaptive normalization toolkit"};
    app.require_subcommand(1);
    std::string kernels = "auto";
    app.add_option("--kernels", kernels, "Kernel backend: auto, scalar, avx2, neon")
        ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));

    TransferArgs transfer;
    auto* cmd_transfer = app.add_subcommand("transfer", "Transfer region statistics from a reference image");
    cmd_transfer->add_option("--source", transfer.source, "Source RGB PNG")->required();
    cmd_transfer->add_option("--reference", transfer.reference, "Reference RGB PNG")->required();
    cmd_transfer->add_option("--source-mask", transfer.source_mask, "Source label PNG")->required();
    cmd_transfer->add_option("--reference-mask", transfer.reference_mask, "Reference label PNG")->required();
    cmd_transfer->add_option("--config", transfer.config, "Region config JSON")->required();
    cmd_transfer->add_option("--out", transfer.out, "Output PNG")->required();
    auto* theta_opt = cmd_transfer->add_option("--theta", transfer.theta, "Gate parameter JSON");
    auto* uniform_opt = cmd_transfer->add_flag("--uniform-gate", transfer.uniform_gate, "Use zero gate parameters");
    theta_opt->excludes(uniform_opt);
    cmd_transfer->add_option("--gate-mode", transfer.gate_mode, "scalar or spatial")
        ->check(CLI::IsMember({"scalar", "spatial"}));
    cmd_transfer->add_option("--resize", transfer.resize, "bilinear or nearest")
        ->check(CLI::IsMember({"bilinear", "nearest"}));

    StatsArgs stats;
    auto* cmd_stats = app.add_subcommand("stats", "Dump per-region pyramid statistics as JSON");
    cmd_stats->add_option("--image", stats.image, "RGB PNG")->required();
    cmd_stats->add_option("--mask", stats.mask, "Label PNG")->required();
    cmd_stats->add_option("--config", stats.config, "Region config JSON")->required();
    cmd_stats->add_option("--out", stats.out, "Write JSON here instead of stdout");

    CheckArgs check;
    auto* cmd_check = app.add_subcommand("check", "Run the invariant suite on seeded random instances");
    cmd_check->add_option("--seed", check.seed, "Instance seed");
    cmd_check->add_flag("--verbose", check.verbose, "List every property");

    GradcheckArgs grad;
    auto* cmd_grad = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
    cmd_grad->add_option("--seed", grad.seed, "Instance seed");
    cmd_grad->add_option("--trials", grad.trials, "Number of random trials")->check(CLI::PositiveNumber);
    cmd_grad->add_option("--report", grad.report, "Write the JSON report here instead of stdout");

    PfdmArgs pfdm;
    auto* cmd_pfdm = app.add_subcommand("pfdm", "Area-weighted per-region color histogram distance");
    cmd_pfdm->add_option("a", pfdm.a, "First RGB PNG")->required();
    cmd_pfdm->add_option("b", pfdm.b, "Second RGB PNG")->required();
    cmd_pfdm->add_option("--mask-a", pfdm.mask_a, "First label PNG")->required();
    cmd_pfdm->add_option("--mask-b", pfdm.mask_b, "Second label PNG")->required();
    cmd_pfdm->add_option("--regions", pfdm.regions, "Comma-separated region ids")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (kernels != "auto") dran::kernels::select(*dran::kernels::parse_backend(kernels));
        if (*cmd_transfer) return run_transfer(transfer);
        if (*cmd_stats) return run_stats(stats);
        if (*cmd_check) return run_check(check);
        if (*cmd_grad) return run_gradcheck(grad);
        if (*cmd_pfdm) return run_pfdm(pfdm);
    } catch (const std::exception& e) {
        std::cerr << "dran: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
