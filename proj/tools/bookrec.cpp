#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bookrec/pipeline.hpp"

namespace {

bookrec::PipelineConfig make_config(const std::string& config_path, std::uint64_t* seed_override,
                                    const std::string& out_dir) {
    bookrec::PipelineConfig cfg;
    if (!config_path.empty()) cfg = bookrec::load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (!out_dir.empty()) {
        cfg.paths.model_dir = out_dir;
        cfg.paths.report_dir = out_dir;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid book recommender: preference profiles, KL similarity, latent factors"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "Pipeline config file (JSON)");
    app.add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_dir, "Output directory (overrides model/report dirs)");

    auto* ingest = app.add_subcommand("ingest", "Parse inputs and persist a dataset summary");
    auto* train = app.add_subcommand("train", "Run the full training pipeline");
    auto* recommend = app.add_subcommand("recommend", "Emit top-N lists for customers");
    auto* evaluate = app.add_subcommand("evaluate", "Score the test split and emit reports");
    auto* synth = app.add_subcommand("synth", "Generate a synthetic planted-preference dataset");
    // Let --config/--seed/--out appear after the subcommand as well.
    for (auto* sub : {ingest, train, recommend, evaluate, synth}) sub->fallthrough();

    std::vector<std::string> customers;
    std::size_t top_n = 10;
    recommend->add_option("--customer", customers, "Customer id (repeatable)")->required();
    recommend->add_option("--top-n", top_n, "List size");

    bookrec::SynthConfig scfg;
    synth->add_option("--customers", scfg.customers, "Number of customers");
    synth->add_option("--books", scfg.books, "Number of books");
    synth->add_option("--genres", scfg.genres, "Number of planted genres");
    synth->add_option("--max-purchases", scfg.max_purchases, "Max purchases per customer");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;  // bad usage is exit 1; --help is 0
    }

    try {
        auto cfg = make_config(config_path, seed_set ? &seed : nullptr, out_dir);
        if (ingest->parsed()) {
            bookrec::cmd_ingest(cfg);
        } else if (train->parsed()) {
            bookrec::cmd_train(cfg);
        } else if (recommend->parsed()) {
            std::cout << bookrec::cmd_recommend(cfg, customers, top_n, std::cerr);
        } else if (evaluate->parsed()) {
            bookrec::cmd_evaluate(cfg);
        } else if (synth->parsed()) {
            if (seed_set) scfg.seed = seed;
            bookrec::cmd_synth(scfg, out_dir.empty() ? "synth" : out_dir);
        }
    } catch (const bookrec::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
