#include "wavlink/dataset.hpp"
#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"
#include "wavlink/store.hpp"
#include "wavlink/sweep.hpp"
#include "wavlink/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace wavlink;
using nlohmann::json;
namespace fs = std::filesystem;

void log_line(const std::string& s) {
    std::cout << s << "\n";
}

std::optional<uint64_t> env_seed_override() {
    const char* env = std::getenv("WAVLINK_SEED");
    if (!env || !*env) return std::nullopt;
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw ValidationError("WAVLINK_SEED must be an unsigned integer");
    }
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg = path.empty() ? default_desk_config() : RunConfig::from_file(path);
    if (auto seed = env_seed_override()) cfg.train.seed = *seed;
    return cfg;
}

void check_resume_compatible(const RunConfig& ckpt_cfg, const RunConfig& cfg) {
    const bool same_model =
        ckpt_cfg.model.feat_bins == cfg.model.feat_bins &&
        ckpt_cfg.model.d_model == cfg.model.d_model &&
        ckpt_cfg.model.audio_layers == cfg.model.audio_layers &&
        ckpt_cfg.model.text_layers == cfg.model.text_layers &&
        ckpt_cfg.model.heads == cfg.model.heads &&
        ckpt_cfg.model.ffn_mult == cfg.model.ffn_mult &&
        ckpt_cfg.model.vocab_size == cfg.model.vocab_size &&
        ckpt_cfg.model.max_text_len == cfg.model.max_text_len &&
        ckpt_cfg.model.proj_dim == cfg.model.proj_dim;
    if (!same_model || ckpt_cfg.train.regime != cfg.train.regime ||
        ckpt_cfg.train.scope != cfg.train.scope ||
        ckpt_cfg.train.text_style != cfg.train.text_style) {
        throw ValidationError("--resume: checkpoint architecture does not match the config");
    }
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir) {
    auto spec = SyntheticDatasetSpec::from_file(spec_path);
    if (auto seed = env_seed_override()) spec.seed = *seed;
    generate_dataset(spec, out_dir);
    const auto ds = Dataset::load(out_dir);
    std::cout << "generated " << ds.items.size() << " items ("
              << ds.train_indices.size() << " train, " << ds.short_pool.size()
              << " short, " << ds.long_pool.size() << " long, "
              << ds.probe_indices.size() << " probe) in " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& resume_path, std::string out_path,
              std::string metrics_path) {
    RunConfig cfg = load_run_config(config_path);
    const Dataset data = Dataset::load(data_dir);

    std::optional<TrainState> resume;
    if (!resume_path.empty()) {
        auto loaded = load_checkpoint(resume_path);
        check_resume_compatible(loaded.cfg, cfg);
        resume = std::move(loaded.state);
        std::cout << "resumed from " << resume_path << " at step "
                  << resume->steps_done << "\n";
    }

    auto result = train(data, cfg, std::move(resume), log_line);

    if (out_path.empty()) out_path = (fs::path(data_dir) / "ckpt.wlck").string();
    save_checkpoint(out_path, result.state, cfg);
    std::cout << "checkpoint: " << out_path << "\n";

    if (metrics_path.empty()) metrics_path = out_path + ".metrics.csv";
    std::ostringstream os;
    os << "epoch,mean_loss,val_t2a_r1,val_a2t_r1\n";
    for (const auto& em : result.epochs) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", em.epoch,
                      em.mean_loss, em.val_t2a_r1, em.val_a2t_r1);
        os << buf;
    }
    io::write_text_file(metrics_path, os.str());
    std::cout << "metrics: " << metrics_path << "\n";
    return 0;
}

int cmd_sweep(const std::string& grid_arg, const std::string& data_dir,
              const std::string& out_path, const std::string& cache_dir,
              const std::string& base_config) {
    const Dataset data = Dataset::load(data_dir);

    std::vector<SweepEntry> grid;
    if (grid_arg == "full") {
        RunConfig base = base_config.empty() ? micro_sweep_config()
                                             : RunConfig::from_file(base_config);
        if (auto seed = env_seed_override()) base.train.seed = *seed;
        grid = full_grid(base);
    } else {
        const json j = json::parse(io::read_text_file(grid_arg));
        if (!j.is_array() || j.empty()) {
            throw ValidationError("sweep grid file must be a nonempty JSON array of configs");
        }
        for (const auto& item : j) {
            SweepEntry e;
            e.cfg = RunConfig::from_json_text(item.dump());
            if (auto seed = env_seed_override()) e.cfg.train.seed = *seed;
            e.config_id = sweep_config_id(e.cfg);
            grid.push_back(std::move(e));
        }
    }

    const std::string cache = cache_dir.empty()
                                  ? (fs::path(data_dir) / "sweep_cache").string()
                                  : cache_dir;
    const auto report = run_sweep(grid, data, cache, log_line);

    const bool markdown = out_path.size() > 3 &&
                          out_path.substr(out_path.size() - 3) == ".md";
    io::write_text_file(out_path, markdown ? sweep_report_markdown(report)
                                           : sweep_report_csv(report));
    std::cout << "report: " << out_path << " (" << report.rows.size() << " rows)\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& out_path, const std::string& md_path,
             const std::string& prompt) {
    auto loaded = load_checkpoint(ckpt_path);
    const Dataset data = Dataset::load(data_dir);
    const auto& ladder = loaded.cfg.model.matryoshka_dims;
    const auto rows = evaluate_model(loaded.state.model, data, ladder, {1, 5, 10},
                                     8, prompt);
    io::write_text_file(out_path, eval_report_csv(rows));
    std::cout << "eval report: " << out_path << "\n";
    if (!md_path.empty()) {
        io::write_text_file(md_path, eval_report_markdown(rows, ladder));
        std::cout << "markdown report: " << md_path << "\n";
    }
    return 0;
}

std::vector<int> parse_ladder(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

int cmd_store_ingest(const std::string& in_path, const std::string& out_path,
                     const std::string& ladder_arg) {
    std::istringstream manifest(io::read_text_file(in_path));
    std::vector<EmbeddingRecord> records;
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        EmbeddingRecord r;
        r.id = j.at("id").get<std::string>();
        r.vector = j.at("vector").get<std::vector<double>>();
        if (j.contains("metadata")) {
            for (const auto& [k, v] : j.at("metadata").items()) {
                r.metadata[k] = v.get<std::string>();
            }
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw ValidationError("store ingest: empty manifest");

    const int dim = static_cast<int>(records[0].vector.size());
    std::vector<int> ladder;
    if (!ladder_arg.empty()) {
        ladder = parse_ladder(ladder_arg);
    } else {
        int d = dim;
        for (int level = 0; level < 4 && d >= 1; ++level) {
            ladder.push_back(d);
            if (d % 2 != 0) break;
            d /= 2;
        }
    }
    EmbeddingStore store(dim, ladder);
    const size_t count = store.ingest(records);
    store.save(out_path);
    std::cout << "stored " << count << " records in " << out_path << "\n";
    return 0;
}

int cmd_store_search(const std::string& store_path, int dim, int topk,
                     const std::string& query_id, const std::string& query_file) {
    const auto store = EmbeddingStore::load(store_path);
    std::vector<double> query;
    if (!query_id.empty()) {
        query = store.by_id(query_id).vector;
    } else if (!query_file.empty()) {
        const json j = json::parse(io::read_text_file(query_file));
        query = j.get<std::vector<double>>();
    } else {
        throw ValidationError("store search: need --query-id or --query-file");
    }
    const auto res = store.search(query, dim, topk);
    for (size_t i = 0; i < res.hits.size(); ++i) {
        std::printf("%zu\t%s\t%.10g\n", i + 1, res.hits[i].id.c_str(), res.hits[i].score);
    }
    std::printf("# dims_used=%d multiply_accumulate_count=%lld bytes_scanned=%lld\n",
                res.stats.dims_used,
                static_cast<long long>(res.stats.multiply_accumulate_count),
                static_cast<long long>(res.stats.bytes_scanned));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavlink: dual-tower audio-text embedding workbench"};
    app.require_subcommand(1);

    std::string spec_path, out_dir;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic paired dataset");
    gen->add_option("--spec", spec_path, "dataset spec JSON")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    std::string config_path, data_dir, resume_path, ckpt_out, metrics_out;
    auto* tr = app.add_subcommand("train", "train a model on a generated dataset");
    tr->add_option("--config", config_path, "run config JSON (defaults to the desk config)");
    tr->add_option("--data", data_dir, "dataset directory")->required();
    tr->add_option("--resume", resume_path, "checkpoint to resume from");
    tr->add_option("--out", ckpt_out, "checkpoint output path");
    tr->add_option("--metrics", metrics_out, "metrics CSV output path");

    std::string grid_arg = "full", sweep_out, cache_dir, base_config;
    std::string sweep_data;
    auto* sw = app.add_subcommand("sweep", "run the design-sweep grid");
    sw->add_option("--grid", grid_arg, "'full' or a JSON array of configs");
    sw->add_option("--data", sweep_data, "dataset directory")->required();
    sw->add_option("--out", sweep_out, "report path (.csv or .md)")->required();
    sw->add_option("--cache", cache_dir, "result cache directory");
    sw->add_option("--base", base_config, "base config for the full grid");

    std::string eval_ckpt, eval_data, eval_out, eval_md;
    std::string eval_prompt = "the sound of {label}";
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    ev->add_option("--data", eval_data, "dataset directory")->required();
    ev->add_option("--out", eval_out, "CSV report path")->required();
    ev->add_option("--md", eval_md, "optional markdown report path");
    ev->add_option("--prompt", eval_prompt, "zero-shot prompt template with {label}");

    auto* st = app.add_subcommand("store", "embedding store operations");
    st->require_subcommand(1);
    std::string ingest_in, ingest_out, ladder_arg;
    auto* sti = st->add_subcommand("ingest", "ingest an embedding manifest");
    sti->add_option("--in", ingest_in, "JSONL manifest of {id, vector, metadata}")->required();
    sti->add_option("--out", ingest_out, "store file")->required();
    sti->add_option("--ladder", ladder_arg, "comma-separated dim ladder");

    std::string search_store, query_id, query_file;
    int search_dim = 0, search_topk = 10;
    auto* sts = st->add_subcommand("search", "search a store");
    sts->add_option("--store", search_store, "store file")->required();
    sts->add_option("--dim", search_dim, "ladder dim to search at")->required();
    sts->add_option("--topk", search_topk, "results to return");
    sts->add_option("--query-id", query_id, "use a stored vector as the query");
    sts->add_option("--query-file", query_file, "JSON array query vector");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(spec_path, out_dir);
        if (tr->parsed()) {
            return cmd_train(config_path, data_dir, resume_path, ckpt_out, metrics_out);
        }
        if (sw->parsed()) {
            return cmd_sweep(grid_arg, sweep_data, sweep_out, cache_dir, base_config);
        }
        if (ev->parsed()) {
            return cmd_eval(eval_ckpt, eval_data, eval_out, eval_md, eval_prompt);
        }
        if (st->parsed()) {
            if (sti->parsed()) return cmd_store_ingest(ingest_in, ingest_out, ladder_arg);
            if (sts->parsed()) {
                return cmd_store_search(search_store, search_dim, search_topk,
                                        query_id, query_file);
            }
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid JSON input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
