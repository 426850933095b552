// Command-line entry point: experiment configs, regime queries and the field catalog.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "adlab/experiment.hpp"

namespace ex = adlab::experiment;

namespace {

int regime_classify_direct(int d, const std::string& alpha, const std::string& p, const std::string& q) {
    try {
        const adlab::RegimeQuery query{d, adlab::exponent_reciprocal(alpha), adlab::exponent_reciprocal(p),
                                       adlab::exponent_reciprocal(q)};
        std::cout << ex::to_json(adlab::classify(query)).dump(2) << "\n";
        return ex::kOk;
    } catch (const adlab::InvalidArgument& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return ex::kSchemaError;
    }
}

/// Writes `content` next to `path` and renames it into place.
void write_atomically(const ex::fs::path& path, const std::string& content) {
    if (path.has_parent_path()) ex::fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        os << content;
        if (!os) throw adlab::io::IoError("cannot write " + tmp.string());
    }
    ex::fs::rename(tmp, path);
}

int regime_map_direct(int d, const std::string& alpha, int resolution, const std::string& out, int threads) {
    adlab::RegionMap map;
    try {
        map = adlab::emit_region_map(d, adlab::exponent_reciprocal(alpha), resolution, threads);
    } catch (const adlab::InvalidArgument& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return ex::kSchemaError;
    }
    try {
        ex::fs::path svg(out);
        write_atomically(svg, adlab::region_map_svg(map));
        write_atomically(ex::fs::path(svg).replace_extension(".csv"), adlab::region_map_csv(map));
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return ex::kIoError;
    }
    for (const auto& c : map.cells) {
        if (!c.coherent()) return ex::kGateFailed;
    }
    return ex::kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adlab: advection-diffusion laboratory on the flat torus"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, out;
    int threads = 1;
    std::int64_t seed = 0;
    app.add_option("--config", config, "experiment config (JSON)");
    app.add_option("--out", out, "run directory (or SVG path for 'regime map' without a config)");
    app.add_option("--threads", threads, "worker threads for rasterization")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");

    auto* run = app.add_subcommand("run", "execute any experiment config");
    auto* simulate = app.add_subcommand("simulate", "solve the advection-diffusion problem");
    auto* commutator = app.add_subcommand("commutator", "commutator convergence study");

    auto* regime = app.add_subcommand("regime", "well-posedness regime oracle");
    regime->require_subcommand(1);
    regime->fallthrough();
    int d = 2, resolution = 64;
    std::string alpha = "inf", p, q;
    auto* classify = regime->add_subcommand("classify", "classify one exponent point");
    classify->fallthrough();
    classify->add_option("--d", d, "dimension");
    classify->add_option("--alpha", alpha, "time exponent of b (number or inf)");
    classify->add_option("--p", p, "space exponent of b");
    classify->add_option("--q", q, "exponent of the initial datum");
    auto* map = regime->add_subcommand("map", "rasterize a (1/p, 1/q) slice");
    map->fallthrough();
    map->add_option("--d", d, "dimension");
    map->add_option("--alpha", alpha, "time exponent of b (number or inf)");
    map->add_option("--resolution", resolution, "cells per axis (>= 16)");

    auto* fields = app.add_subcommand("fields", "velocity field catalog");
    fields->require_subcommand(1);
    fields->fallthrough();
    auto* list = fields->add_subcommand("list", "print the catalog with integrability cards");
    auto* audit = fields->add_subcommand("audit", "divergence and integrability audit");
    audit->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ex::kSchemaError;
    }

    ex::RunOptions opt;
    if (!out.empty()) opt.out = out;
    if (*seed_opt) opt.seed = seed;
    opt.threads = threads;

    auto run_config = [&](std::optional<std::string> kind) {
        if (config.empty()) {
            std::cerr << "schema error: --config is required\n";
            return int(ex::kSchemaError);
        }
        opt.expected_kind = std::move(kind);
        return ex::run_file(config, opt);
    };

    if (*run) return run_config(std::nullopt);
    if (*simulate) return run_config("simulate");
    if (*commutator) return run_config("commutator");
    if (*classify) {
        if (!config.empty()) return run_config("regime-classify");
        if (p.empty() || q.empty()) {
            std::cerr << "schema error: regime classify needs --p and --q (or --config)\n";
            return ex::kSchemaError;
        }
        return regime_classify_direct(d, alpha, p, q);
    }
    if (*map) {
        if (!config.empty()) return run_config("regime-map");
        if (out.empty()) {
            std::cerr << "schema error: regime map needs --out <file.svg> (or --config)\n";
            return ex::kSchemaError;
        }
        return regime_map_direct(d, alpha, resolution, out, threads);
    }
    if (*list) {
        std::cout << ex::catalog_table();
        return ex::kOk;
    }
    if (*audit) return run_config("field-audit");
    return ex::kSchemaError;
}
