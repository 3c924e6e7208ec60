#include "wavlink/sweep.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace wavlink {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

} // namespace

std::string sweep_config_id(const RunConfig& cfg) {
    return to_string(cfg.train.text_style) + "-" + to_string(cfg.train.loss) + "-" +
           to_string(cfg.train.regime) + "-" + to_string(cfg.train.scope);
}

std::vector<SweepEntry> full_grid(const RunConfig& base) {
    std::vector<SweepEntry> grid;
    for (TextStyle style : {TextStyle::clip_style, TextStyle::bert_style}) {
        for (LossKind loss : {LossKind::clip, LossKind::siglip}) {
            for (Regime regime : {Regime::projector_only, Regime::lora, Regime::full}) {
                for (Scope scope : {Scope::audio_only, Scope::both_towers}) {
                    SweepEntry e;
                    e.cfg = base;
                    e.cfg.train.text_style = style;
                    e.cfg.train.loss = loss;
                    e.cfg.train.regime = regime;
                    e.cfg.train.scope = scope;
                    e.config_id = sweep_config_id(e.cfg);
                    grid.push_back(std::move(e));
                }
            }
        }
    }
    return grid;
}

namespace {

SweepRow row_from_json(const json& j) {
    SweepRow r;
    r.config_id = j.at("config_id").get<std::string>();
    r.text_style = j.at("text_style").get<std::string>();
    r.loss = j.at("loss").get<std::string>();
    r.regime = j.at("regime").get<std::string>();
    r.scope = j.at("scope").get<std::string>();
    r.short_t2a_r1 = j.at("short_t2a_r1").get<double>();
    r.short_a2t_r1 = j.at("short_a2t_r1").get<double>();
    r.long_t2a_r1 = j.at("long_t2a_r1").get<double>();
    r.long_a2t_r1 = j.at("long_a2t_r1").get<double>();
    r.mean_r1 = j.at("mean_r1").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.failed = j.at("failed").get<bool>();
    r.error = j.at("error").get<std::string>();
    return r;
}

json row_to_json(const SweepRow& r, uint64_t config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["config_id"] = r.config_id;
    j["text_style"] = r.text_style;
    j["loss"] = r.loss;
    j["regime"] = r.regime;
    j["scope"] = r.scope;
    j["short_t2a_r1"] = r.short_t2a_r1;
    j["short_a2t_r1"] = r.short_a2t_r1;
    j["long_t2a_r1"] = r.long_t2a_r1;
    j["long_a2t_r1"] = r.long_a2t_r1;
    j["mean_r1"] = r.mean_r1;
    j["wall_time_s"] = r.wall_time_s;
    j["failed"] = r.failed;
    j["error"] = r.error;
    return j;
}

} // namespace

SweepReport run_sweep(const std::vector<SweepEntry>& grid, const Dataset& data,
                      const std::string& cache_dir, const LogFn& log) {
    if (grid.empty()) throw ValidationError("run_sweep: empty grid");
    if (!cache_dir.empty()) fs::create_directories(cache_dir);

    SweepReport report;
    for (const auto& entry : grid) {
        const uint64_t hash = entry.cfg.hash();
        const std::string cache_path =
            cache_dir.empty() ? "" : (fs::path(cache_dir) / (entry.config_id + ".json")).string();

        if (!cache_path.empty() && fs::exists(cache_path)) {
            try {
                const json j = json::parse(io::read_text_file(cache_path));
                if (j.at("config_hash").get<uint64_t>() == hash) {
                    SweepRow row = row_from_json(j);
                    row.from_cache = true;
                    report.rows.push_back(std::move(row));
                    if (log) log("sweep: " + entry.config_id + " (cached)");
                    continue;
                }
            } catch (const std::exception&) {
                // stale or unreadable cache entry: recompute
            }
        }

        SweepRow row;
        row.config_id = entry.config_id;
        row.text_style = to_string(entry.cfg.train.text_style);
        row.loss = to_string(entry.cfg.train.loss);
        row.regime = to_string(entry.cfg.train.regime);
        row.scope = to_string(entry.cfg.train.scope);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto result = train(data, entry.cfg);
            const auto& model = result.state.model;
            const auto short_pool = build_pool(model, data, data.short_pool);
            const auto long_pool = build_pool(model, data, data.long_pool);
            row.short_t2a_r1 = recall_at_k(short_pool, Direction::t2a, 1);
            row.short_a2t_r1 = recall_at_k(short_pool, Direction::a2t, 1);
            row.long_t2a_r1 = recall_at_k(long_pool, Direction::t2a, 1);
            row.long_a2t_r1 = recall_at_k(long_pool, Direction::a2t, 1);
            row.mean_r1 = 0.25 * (row.short_t2a_r1 + row.short_a2t_r1 +
                                  row.long_t2a_r1 + row.long_a2t_r1);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
        row.wall_time_s = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
        if (!cache_path.empty()) {
            io::write_text_file(cache_path, row_to_json(row, hash).dump(2) + "\n");
        }
        if (log) {
            std::ostringstream os;
            os << "sweep: " << entry.config_id;
            if (row.failed) {
                os << " FAILED: " << row.error;
            } else {
                os << " mean R@1 " << fmt_short(row.mean_r1);
            }
            log(os.str());
        }
        report.rows.push_back(std::move(row));
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const SweepRow& a, const SweepRow& b) {
        if (a.failed != b.failed) return !a.failed;
        if (a.mean_r1 != b.mean_r1) return a.mean_r1 > b.mean_r1;
        return a.config_id < b.config_id;
    });
    return report;
}

std::string sweep_report_values_csv(const SweepReport& report) {
    if (report.rows.empty()) throw ValidationError("sweep report: no rows");
    std::ostringstream os;
    os << "config_id,text_style,loss,regime,scope,short_t2a_r1,short_a2t_r1,"
          "long_t2a_r1,long_a2t_r1,mean_r1,status\n";
    for (const auto& r : report.rows) {
        os << r.config_id << "," << r.text_style << "," << r.loss << "," << r.regime
           << "," << r.scope << "," << fmt_full(r.short_t2a_r1) << ","
           << fmt_full(r.short_a2t_r1) << "," << fmt_full(r.long_t2a_r1) << ","
           << fmt_full(r.long_a2t_r1) << "," << fmt_full(r.mean_r1) << ","
           << (r.failed ? "failed" : "ok") << "\n";
    }
    return os.str();
}

std::string sweep_report_csv(const SweepReport& report) {
    if (report.rows.empty()) throw ValidationError("sweep report: no rows");
    std::ostringstream os;
    os << "config_id,text_style,loss,regime,scope,short_t2a_r1,short_a2t_r1,"
          "long_t2a_r1,long_a2t_r1,mean_r1,status,wall_time_s\n";
    for (const auto& r : report.rows) {
        os << r.config_id << "," << r.text_style << "," << r.loss << "," << r.regime
           << "," << r.scope << "," << fmt_full(r.short_t2a_r1) << ","
           << fmt_full(r.short_a2t_r1) << "," << fmt_full(r.long_t2a_r1) << ","
           << fmt_full(r.long_a2t_r1) << "," << fmt_full(r.mean_r1) << ","
           << (r.failed ? "failed" : "ok") << "," << fmt_short(r.wall_time_s) << "\n";
    }
    return os.str();
}

std::string sweep_report_markdown(const SweepReport& report) {
    if (report.rows.empty()) throw ValidationError("sweep report: no rows");
    std::ostringstream os;
    os << "| Config | Short T2A | Short A2T | Long T2A | Long A2T | Mean R@1 |\n";
    os << "|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        if (r.failed) {
            os << "| " << r.config_id << " | failed: " << r.error << " | | | | |\n";
        } else {
            os << "| " << r.config_id << " | " << fmt_short(r.short_t2a_r1) << " | "
               << fmt_short(r.short_a2t_r1) << " | " << fmt_short(r.long_t2a_r1) << " | "
               << fmt_short(r.long_a2t_r1) << " | " << fmt_short(r.mean_r1) << " |\n";
        }
    }
    return os.str();
}

std::vector<EvalRow> evaluate_model(const Model& m, const Dataset& data,
                                    const std::vector<int>& ladder,
                                    const std::vector<int>& ks,
                                    int zsc_classes,
                                    const std::string& prompt_template) {
    std::vector<EvalRow> rows;
    struct Bench {
        const char* name;
        const std::vector<int>* indices;
    };
    const Bench benches[] = {{"short", &data.short_pool}, {"long", &data.long_pool}};
    for (const auto& bench : benches) {
        if (bench.indices->empty()) continue;
        const auto pool = build_pool(m, data, *bench.indices);
        for (int level = 1; level <= static_cast<int>(ladder.size()); ++level) {
            for (const auto& tm : truncated_eval(pool, ladder, level, ks)) {
                rows.push_back({bench.name, to_string(tm.dir), tm.k, level,
                                tm.value, tm.delta_vs_full});
            }
        }
    }

    if (!data.probe_indices.empty() && !data.class_names.empty()) {
        // zero-shot over the first zsc_classes classes
        const int n_classes = std::min<int>(zsc_classes,
                                            static_cast<int>(data.class_names.size()));
        std::vector<std::string> labels(data.class_names.begin(),
                                        data.class_names.begin() + n_classes);
        std::vector<std::vector<double>> audio;
        std::vector<int> gold;
        for (int idx : data.probe_indices) {
            const auto& item = data.items[idx];
            if (item.class_id < n_classes) {
                audio.push_back(embed_audio(m, item.features));
                gold.push_back(item.class_id);
            }
        }
        if (!audio.empty()) {
            auto embed = [&m](const std::string& text) {
                return embed_text_raw(m, tokenize_bytes(text));
            };
            const auto zsc = zero_shot_classify(audio, gold, labels, prompt_template, embed);
            rows.push_back({"zsc", "-", 1, 1, zsc.accuracy, 0.0});
        }

        if (!data.mcq.empty()) {
            auto embed_tokens = [&m](const std::vector<int>& tokens) {
                return embed_text_raw(m, tokens);
            };
            size_t correct = 0;
            for (const auto& rec : data.mcq) {
                McqItem item;
                item.audio_embedding = embed_audio(m, data.by_id(rec.audio_id).features);
                item.question_tokens = tokenize_bytes(rec.question);
                for (const auto& choice : rec.choices) {
                    item.choice_tokens.push_back(tokenize_bytes(choice));
                }
                item.answer = rec.answer;
                if (mcq_answer(item, embed_tokens, m.cfg.max_text_len) == rec.answer) {
                    ++correct;
                }
            }
            rows.push_back({"mcq", "-", 1, 1,
                            static_cast<double>(correct) / data.mcq.size(), 0.0});
        }
    }
    return rows;
}

std::string eval_report_csv(const std::vector<EvalRow>& rows) {
    if (rows.empty()) throw ValidationError("eval report: no rows");
    std::ostringstream os;
    os << "benchmark,direction,k,dim_level,value,delta_vs_full\n";
    for (const auto& r : rows) {
        os << r.benchmark << "," << r.direction << "," << r.k << "," << r.dim_level
           << "," << fmt_full(r.value) << "," << fmt_full(r.delta_vs_full) << "\n";
    }
    return os.str();
}

std::vector<EvalRow> parse_eval_csv(const std::string& text) {
    std::vector<EvalRow> rows;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("eval csv: empty file");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        EvalRow r;
        std::getline(ls, r.benchmark, ',');
        std::getline(ls, r.direction, ',');
        std::getline(ls, field, ',');
        r.k = std::stoi(field);
        std::getline(ls, field, ',');
        r.dim_level = std::stoi(field);
        std::getline(ls, field, ',');
        r.value = std::stod(field);
        std::getline(ls, field, ',');
        r.delta_vs_full = std::stod(field);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string eval_report_markdown(const std::vector<EvalRow>& rows,
                                 const std::vector<int>& ladder) {
    if (rows.empty()) throw ValidationError("eval report: no rows");
    auto find = [&rows](const std::string& bench, const std::string& dir, int k,
                        int level) -> const EvalRow* {
        for (const auto& r : rows) {
            if (r.benchmark == bench && r.direction == dir && r.k == k &&
                r.dim_level == level) {
                return &r;
            }
        }
        return nullptr;
    };
    std::vector<int> ks;
    for (const auto& r : rows) {
        if (r.benchmark == "short" || r.benchmark == "long") {
            if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
        }
    }
    std::sort(ks.begin(), ks.end());

    std::ostringstream os;
    os << "| Pool |";
    for (const char* dir : {"T2A", "A2T"}) {
        for (int k : ks) os << " " << dir << " R@" << k << " |";
    }
    os << "\n|---|";
    for (size_t i = 0; i < ks.size() * 2; ++i) os << "---|";
    os << "\n";
    for (const std::string bench : {"short", "long"}) {
        bool have = false;
        for (const auto& r : rows) {
            if (r.benchmark == bench) have = true;
        }
        if (!have) continue;
        os << "| " << bench << " |";
        for (const std::string dir : {"t2a", "a2t"}) {
            for (int k : ks) {
                const auto* r = find(bench, dir, k, 1);
                os << " " << (r ? fmt_short(r->value) : "-") << " |";
            }
        }
        os << "\n";
        for (int level = 2; level <= static_cast<int>(ladder.size()); ++level) {
            os << "| &Delta; M-1/" << (ladder[0] / ladder[level - 1]) << " |";
            for (const std::string dir : {"t2a", "a2t"}) {
                for (int k : ks) {
                    const auto* r = find(bench, dir, k, level);
                    os << " " << (r ? fmt_short(r->delta_vs_full) : "-") << " |";
                }
            }
            os << "\n";
        }
    }

    bool extras = false;
    for (const auto& r : rows) {
        if (r.benchmark == "zsc" || r.benchmark == "mcq") extras = true;
    }
    if (extras) {
        os << "\n| Task | Accuracy |\n|---|---|\n";
        for (const auto& r : rows) {
            if (r.benchmark == "zsc") os << "| zero-shot classification | " << fmt_short(r.value) << " |\n";
            if (r.benchmark == "mcq") os << "| MCQ | " << fmt_short(r.value) << " |\n";
        }
    }
    return os.str();
}

} // namespace wavlink
