#include "wavlink/dataset.hpp"

#include "wavlink/errors.hpp"
#include "wavlink/io.hpp"
#include "wavlink/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

namespace wavlink {

using nlohmann::json;
namespace fs = std::filesystem;

void SyntheticDatasetSpec::validate() const {
    if (num_classes < 2) throw ValidationError("dataset spec: num_classes must be >= 2");
    if (pairs_per_class < 1) throw ValidationError("dataset spec: pairs_per_class must be >= 1");
    if (feat_bins < 1) throw ValidationError("dataset spec: feat_bins must be >= 1");
    if (frames < 2) {
        throw ValidationError("dataset spec: frames must be >= 2 for the conv front-end");
    }
    if (noise_scale < 0.0) throw ValidationError("dataset spec: noise_scale must be >= 0");
    if (tokens_per_caption < 1) {
        throw ValidationError("dataset spec: tokens_per_caption must be >= 1");
    }
    if (distractor_rate < 0.0 || distractor_rate > 1.0) {
        throw ValidationError("dataset spec: distractor_rate must be in [0, 1]");
    }
}

SyntheticDatasetSpec SyntheticDatasetSpec::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("dataset spec: invalid JSON: ") + e.what());
    }
    static const std::set<std::string> keys = {
        "num_classes", "pairs_per_class", "feat_bins", "frames",
        "noise_scale", "tokens_per_caption", "distractor_rate", "seed"};
    for (const auto& [key, _] : j.items()) {
        if (!keys.count(key)) throw ValidationError("dataset spec: unknown key '" + key + "'");
    }
    SyntheticDatasetSpec s;
    try {
        if (j.contains("num_classes")) s.num_classes = j.at("num_classes").get<int>();
        if (j.contains("pairs_per_class")) s.pairs_per_class = j.at("pairs_per_class").get<int>();
        if (j.contains("feat_bins")) s.feat_bins = j.at("feat_bins").get<int>();
        if (j.contains("frames")) s.frames = j.at("frames").get<int>();
        if (j.contains("noise_scale")) s.noise_scale = j.at("noise_scale").get<double>();
        if (j.contains("tokens_per_caption")) {
            s.tokens_per_caption = j.at("tokens_per_caption").get<int>();
        }
        if (j.contains("distractor_rate")) s.distractor_rate = j.at("distractor_rate").get<double>();
        if (j.contains("seed")) s.seed = j.at("seed").get<uint64_t>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("dataset spec: bad value type: ") + e.what());
    }
    s.validate();
    return s;
}

SyntheticDatasetSpec SyntheticDatasetSpec::from_file(const std::string& path) {
    return from_json_text(io::read_text_file(path));
}

std::string SyntheticDatasetSpec::to_json_text() const {
    json j;
    j["num_classes"] = num_classes;
    j["pairs_per_class"] = pairs_per_class;
    j["feat_bins"] = feat_bins;
    j["frames"] = frames;
    j["noise_scale"] = noise_scale;
    j["tokens_per_caption"] = tokens_per_caption;
    j["distractor_rate"] = distractor_rate;
    j["seed"] = seed;
    return j.dump();
}

void write_feature_file(const std::string& path, const FeatureSequence& f) {
    auto os = io::open_out(path);
    os.write("WLFT", 4);
    io::write_u32(os, static_cast<uint32_t>(f.bins));
    io::write_u32(os, static_cast<uint32_t>(f.frames));
    io::write_f64_array(os, f.values);
    if (!os) throw IoError("failed writing feature file " + path);
}

FeatureSequence read_feature_file(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "WLFT", "feature file " + path);
    FeatureSequence f;
    f.bins = static_cast<int>(io::read_u32(is));
    f.frames = static_cast<int>(io::read_u32(is));
    f.values = io::read_f64_array(is, static_cast<size_t>(f.bins) * f.frames);
    f.validate();
    return f;
}

namespace {

// Unique 6-letter class names with pairwise Hamming distance >= 4, so the
// token signatures of different classes barely overlap position-by-position.
std::vector<std::string> make_class_names(int n, Rng& rng) {
    constexpr int name_len = 6;
    constexpr int min_distance = 4;
    std::vector<std::string> names;
    while (static_cast<int>(names.size()) < n) {
        std::string name;
        for (int s = 0; s < name_len; ++s) {
            name += static_cast<char>('a' + rng.uniform_index(26));
        }
        bool ok = true;
        for (const auto& prev : names) {
            int distance = 0;
            for (int s = 0; s < name_len; ++s) {
                if (prev[s] != name[s]) ++distance;
            }
            if (distance < min_distance) {
                ok = false;
                break;
            }
        }
        if (ok) names.push_back(std::move(name));
    }
    return names;
}

std::vector<int> make_caption(const std::vector<int>& signature,
                              const SyntheticDatasetSpec& spec, Rng& rng) {
    const int cap = spec.tokens_per_caption;
    const int n_dis = static_cast<int>(std::llround(spec.distractor_rate * cap));
    std::vector<bool> is_distractor(cap, false);
    // choose distractor slots without replacement
    std::vector<int> slots(cap);
    for (int i = 0; i < cap; ++i) slots[i] = i;
    for (int i = 0; i < n_dis; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(cap - i));
        std::swap(slots[i], slots[j]);
        is_distractor[slots[i]] = true;
    }
    std::vector<int> tokens(cap);
    int sig_pos = 0;
    for (int i = 0; i < cap; ++i) {
        if (is_distractor[i]) {
            tokens[i] = kFirstDataToken +
                        static_cast<int>(rng.uniform_index(256 - kFirstDataToken));
        } else {
            tokens[i] = signature[sig_pos % signature.size()];
            ++sig_pos;
        }
    }
    return tokens;
}

FeatureSequence make_features(const std::vector<double>& tmpl, int bins, int base_frames,
                              int frames, double noise_scale, Rng& rng) {
    FeatureSequence f;
    f.bins = bins;
    f.frames = frames;
    f.values.resize(static_cast<size_t>(bins) * frames);
    for (int b = 0; b < bins; ++b) {
        for (int t = 0; t < frames; ++t) {
            // templates tile along time so longer clips keep class identity
            const double base = tmpl[static_cast<size_t>(b) * base_frames + (t % base_frames)];
            f.values[static_cast<size_t>(b) * frames + t] =
                base + noise_scale * rng.gaussian();
        }
    }
    return f;
}

std::string item_id(const std::string& pool, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%05d", pool.c_str(), index);
    return buf;
}

} // namespace

void generate_dataset(const SyntheticDatasetSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(fs::path(out_dir) / "features");

    Rng name_rng(spec.seed, 50);
    const auto names = make_class_names(spec.num_classes, name_rng);

    // Per-class templates: a class-specific spectral profile shared by all
    // frames plus iid texture, so class identity shows up in the per-bin
    // time statistics the way real sound classes differ in spectral shape.
    std::vector<std::vector<double>> templates(spec.num_classes);
    for (int c = 0; c < spec.num_classes; ++c) {
        Rng trng(spec.seed, 100 + static_cast<uint64_t>(c));
        const auto profile = trng.gaussian_vector(spec.feat_bins, 1.0);
        auto texture = trng.gaussian_vector(
            static_cast<size_t>(spec.feat_bins) * spec.frames, 0.5);
        for (int b = 0; b < spec.feat_bins; ++b) {
            for (int t = 0; t < spec.frames; ++t) {
                texture[static_cast<size_t>(b) * spec.frames + t] += profile[b];
            }
        }
        templates[c] = std::move(texture);
    }

    std::ostringstream manifest;
    uint64_t item_stream = 1000;
    auto emit_pool = [&](const std::string& pool, int per_class, int frames) {
        int index = 0;
        for (int c = 0; c < spec.num_classes; ++c) {
            const auto signature = tokenize_bytes(names[c]);
            for (int p = 0; p < per_class; ++p) {
                Rng rng(spec.seed, item_stream++);
                const std::string id = item_id(pool, index++);
                const std::string rel = "features/" + id + ".wlft";
                const auto feats = make_features(templates[c], spec.feat_bins,
                                                 spec.frames, frames,
                                                 spec.noise_scale, rng);
                write_feature_file((fs::path(out_dir) / rel).string(), feats);
                json line;
                line["id"] = id;
                line["feature_file"] = rel;
                line["tokens"] = make_caption(signature, spec, rng);
                line["class_id"] = c;
                line["pool"] = pool;
                manifest << line.dump() << "\n";
            }
        }
    };

    emit_pool("train", spec.pairs_per_class, spec.frames);
    emit_pool("short", kPoolPairsPerClass, spec.frames);
    emit_pool("long", kPoolPairsPerClass, spec.frames * 2);
    emit_pool("probe", kProbePairsPerClass, spec.frames);

    io::write_text_file((fs::path(out_dir) / "manifest.jsonl").string(), manifest.str());

    {
        json classes = json::array();
        for (int c = 0; c < spec.num_classes; ++c) {
            classes.push_back({{"id", c}, {"name", names[c]}});
        }
        io::write_text_file((fs::path(out_dir) / "classes.json").string(),
                            json({{"classes", classes}}).dump(2) + "\n");
    }

    {
        // one question per probe item, choices drawn from other classes;
        // fewer classes than kMcqChoices shrink the option count
        std::ostringstream mcq;
        const std::string question = "what kind of sound is this";
        const int n_choices = std::min(kMcqChoices, spec.num_classes);
        int index = 0;
        for (int c = 0; c < spec.num_classes; ++c) {
            for (int p = 0; p < kProbePairsPerClass; ++p) {
                Rng rng(spec.seed, 900000 + static_cast<uint64_t>(index));
                std::vector<int> wrong;
                while (static_cast<int>(wrong.size()) < n_choices - 1) {
                    const int w = static_cast<int>(rng.uniform_index(spec.num_classes));
                    if (w != c && std::find(wrong.begin(), wrong.end(), w) == wrong.end()) {
                        wrong.push_back(w);
                    }
                }
                const int answer_pos = static_cast<int>(rng.uniform_index(n_choices));
                std::vector<std::string> choices;
                int wi = 0;
                for (int pos = 0; pos < n_choices; ++pos) {
                    choices.push_back(pos == answer_pos ? names[c] : names[wrong[wi++]]);
                }
                json line;
                line["audio_id"] = item_id("probe", index);
                line["question"] = question;
                line["choices"] = choices;
                line["answer"] = answer_pos;
                mcq << line.dump() << "\n";
                ++index;
            }
        }
        io::write_text_file((fs::path(out_dir) / "mcq.jsonl").string(), mcq.str());
    }

    io::write_text_file((fs::path(out_dir) / "dataset_spec.json").string(),
                        spec.to_json_text() + "\n");
}

const DatasetItem& Dataset::by_id(const std::string& id) const {
    for (const auto& item : items) {
        if (item.id == id) return item;
    }
    throw ValidationError("dataset: unknown item id " + id);
}

Dataset Dataset::load(const std::string& dir) {
    Dataset ds;
    std::istringstream manifest(io::read_text_file((fs::path(dir) / "manifest.jsonl").string()));
    std::string line;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError(std::string("manifest: invalid JSON line: ") + e.what());
        }
        DatasetItem item;
        item.id = j.at("id").get<std::string>();
        item.feature_file = j.at("feature_file").get<std::string>();
        item.tokens = j.at("tokens").get<std::vector<int>>();
        item.class_id = j.at("class_id").get<int>();
        item.pool = j.at("pool").get<std::string>();
        item.features = read_feature_file((fs::path(dir) / item.feature_file).string());
        const int idx = static_cast<int>(ds.items.size());
        if (item.pool == "train") {
            ds.train_indices.push_back(idx);
        } else if (item.pool == "short") {
            ds.short_pool.push_back(idx);
        } else if (item.pool == "long") {
            ds.long_pool.push_back(idx);
        } else if (item.pool == "probe") {
            ds.probe_indices.push_back(idx);
        } else {
            throw ValidationError("manifest: unknown pool '" + item.pool + "'");
        }
        ds.items.push_back(std::move(item));
    }
    if (ds.items.empty()) throw ValidationError("dataset: empty manifest in " + dir);

    {
        const json j = json::parse(io::read_text_file((fs::path(dir) / "classes.json").string()));
        for (const auto& c : j.at("classes")) {
            const int id = c.at("id").get<int>();
            if (id != static_cast<int>(ds.class_names.size())) {
                throw ValidationError("classes.json: ids must be dense and ordered");
            }
            ds.class_names.push_back(c.at("name").get<std::string>());
        }
    }

    const auto mcq_path = (fs::path(dir) / "mcq.jsonl").string();
    if (fs::exists(mcq_path)) {
        std::istringstream mcq(io::read_text_file(mcq_path));
        while (std::getline(mcq, line)) {
            if (line.empty()) continue;
            const json j = json::parse(line);
            McqRecord r;
            r.audio_id = j.at("audio_id").get<std::string>();
            r.question = j.at("question").get<std::string>();
            r.choices = j.at("choices").get<std::vector<std::string>>();
            r.answer = j.at("answer").get<int>();
            if (r.answer < 0 || r.answer >= static_cast<int>(r.choices.size())) {
                throw ValidationError("mcq.jsonl: answer index out of range");
            }
            ds.mcq.push_back(std::move(r));
        }
    }
    return ds;
}

} // namespace wavlink
