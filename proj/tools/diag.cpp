// Checkpoint diagnostics: class-structure statistics of both towers.

#include "wavlink/dataset.hpp"
#include "wavlink/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <vector>

using namespace wavlink;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct ClassStats {
    double within{0.0};
    double cross{0.0};
    double centroid_acc{0.0};
};

ClassStats stats_for(const std::vector<std::vector<double>>& embs,
                     const std::vector<int>& classes, int num_classes) {
    ClassStats cs;
    double win = 0.0, crs = 0.0;
    int nw = 0, nc = 0;
    for (size_t i = 0; i < embs.size(); ++i) {
        for (size_t j = i + 1; j < embs.size(); ++j) {
            const double c = dot(embs[i], embs[j]);
            if (classes[i] == classes[j]) {
                win += c;
                ++nw;
            } else {
                crs += c;
                ++nc;
            }
        }
    }
    cs.within = win / std::max(1, nw);
    cs.cross = crs / std::max(1, nc);

    const size_t d = embs[0].size();
    std::vector<std::vector<double>> centroid(num_classes, std::vector<double>(d, 0.0));
    std::vector<int> count(num_classes, 0);
    for (size_t i = 0; i < embs.size(); ++i) {
        for (size_t k = 0; k < d; ++k) centroid[classes[i]][k] += embs[i][k];
        ++count[classes[i]];
    }
    for (int c = 0; c < num_classes; ++c) {
        for (size_t k = 0; k < d; ++k) centroid[c][k] /= std::max(1, count[c]);
    }
    int correct = 0;
    for (size_t i = 0; i < embs.size(); ++i) {
        int best = 0;
        double best_s = -2.0;
        for (int c = 0; c < num_classes; ++c) {
            const double s = dot(embs[i], centroid[c]);
            if (s > best_s) {
                best_s = s;
                best = c;
            }
        }
        if (best == classes[i]) ++correct;
    }
    cs.centroid_acc = static_cast<double>(correct) / embs.size();
    return cs;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: diag <ckpt> <data_dir>\n");
        return 1;
    }
    auto loaded = load_checkpoint(argv[1]);
    const auto data = Dataset::load(argv[2]);
    const auto& m = loaded.state.model;
    const int nc = static_cast<int>(data.class_names.size());

    std::vector<std::vector<double>> audio_embs, text_embs;
    std::vector<int> classes;
    for (int idx : data.short_pool) {
        const auto& item = data.items[idx];
        audio_embs.push_back(embed_audio(m, item.features));
        text_embs.push_back(embed_text_raw(m, item.tokens));
        classes.push_back(item.class_id);
    }
    const auto astats = stats_for(audio_embs, classes, nc);
    const auto tstats = stats_for(text_embs, classes, nc);
    std::printf("audio: within %.4f cross %.4f centroid_acc %.4f\n", astats.within,
                astats.cross, astats.centroid_acc);
    std::printf("text:  within %.4f cross %.4f centroid_acc %.4f\n", tstats.within,
                tstats.cross, tstats.centroid_acc);

    // cross-modal: text query -> nearest audio class centroid
    const size_t d = audio_embs[0].size();
    std::vector<std::vector<double>> centroid(nc, std::vector<double>(d, 0.0));
    std::vector<int> count(nc, 0);
    for (size_t i = 0; i < audio_embs.size(); ++i) {
        for (size_t k = 0; k < d; ++k) centroid[classes[i]][k] += audio_embs[i][k];
        ++count[classes[i]];
    }
    for (int c = 0; c < nc; ++c) {
        for (size_t k = 0; k < d; ++k) centroid[c][k] /= std::max(1, count[c]);
    }
    int correct = 0;
    for (size_t i = 0; i < text_embs.size(); ++i) {
        int best = 0;
        double best_s = -2.0;
        for (int c = 0; c < nc; ++c) {
            const double s = dot(text_embs[i], centroid[c]);
            if (s > best_s) {
                best_s = s;
                best = c;
            }
        }
        if (best == classes[i]) ++correct;
    }
    std::printf("cross: text->audio-centroid class acc %.4f\n",
                static_cast<double>(correct) / text_embs.size());
    return 0;
}
