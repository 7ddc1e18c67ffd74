#include <doctest.h>

#include <cmath>
#include <cstring>

#include "conceptguard/synth.hpp"
#include "conceptguard/vector_ops.hpp"

using namespace conceptguard;

namespace {

std::vector<const PromptEmbeddingRecord*> of_category(const EmbeddingDataset& dataset,
                                                      PromptCategory category) {
    std::vector<const PromptEmbeddingRecord*> records;
    for (const auto& record : dataset.records) {
        if (record.category == category) records.push_back(&record);
    }
    return records;
}

} // namespace

TEST_CASE("synth shape, ids and determinism") {
    PlantedGeneratorSpec spec;
    spec.seed = 1;
    spec.benign_count = 5;
    spec.harmful_count = 4;
    spec.jailbreak_count = 3;
    spec.attack_tag = "demo";
    const auto dataset = synth(spec);
    CHECK(dataset.records.size() == 12);
    CHECK(dataset.num_layers == spec.num_layers);
    CHECK(dataset.dim == spec.dim);
    CHECK(dataset.records[0].prompt_id == "b0000");
    CHECK(dataset.records[5].prompt_id == "h0000");
    CHECK(dataset.records[9].prompt_id == "j0000");
    CHECK(dataset.records[9].attack_tag == "demo");
    CHECK(dataset.records[0].attack_tag.empty());

    const auto again = synth(spec);
    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        for (std::size_t l = 0; l < dataset.records[r].layers.size(); ++l) {
            CHECK(std::memcmp(dataset.records[r].layers[l].data(),
                              again.records[r].layers[l].data(),
                              dataset.dim * sizeof(float)) == 0);
        }
    }
}

TEST_CASE("noiseless, baseless construction is exact") {
    PlantedGeneratorSpec spec;
    spec.seed = 2;
    spec.sigma = 0.0;
    spec.base_scale = 0.0;
    spec.alpha = 1.0;
    spec.benign_count = 3;
    spec.harmful_count = 3;
    spec.jailbreak_count = 3;
    const auto dataset = synth(spec);
    const auto directions = planted_directions(spec);

    const auto benign = of_category(dataset, PromptCategory::benign);
    const auto harmful = of_category(dataset, PromptCategory::harmful);
    for (std::size_t i = 0; i < harmful.size(); ++i) {
        const auto difference = subtract(harmful[i]->layers[spec.toxic_layer],
                                         benign[i]->layers[spec.toxic_layer]);
        // sigma = 0, base 0: harmful - benign at the toxic layer is exactly u_t
        for (int c = 0; c < spec.dim; ++c) {
            CHECK(difference[static_cast<std::size_t>(c)] ==
                  directions.toxic[static_cast<std::size_t>(c)]);
        }
        // and zero everywhere else
        for (int l = 0; l < spec.num_layers; ++l) {
            if (l == spec.toxic_layer) continue;
            CHECK(norm(subtract(harmful[i]->layers[static_cast<std::size_t>(l)],
                                benign[i]->layers[static_cast<std::size_t>(l)])) == 0.0);
        }
    }
}

TEST_CASE("planted directions are unit and orthogonal") {
    PlantedGeneratorSpec spec;
    spec.seed = 3;
    const auto directions = planted_directions(spec);
    CHECK(norm(directions.toxic) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(norm(directions.jailbreak) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::fabs(dot(directions.toxic, directions.jailbreak)) < 1e-6);
    CHECK(directions.layer_base.size() == static_cast<std::size_t>(spec.num_layers));
    for (const auto& base : directions.layer_base) {
        CHECK(norm(base) == doctest::Approx(spec.base_scale).epsilon(1e-6));
    }
}

TEST_CASE("jailbreak direction variants form an orthonormal chain") {
    PlantedGeneratorSpec spec;
    spec.seed = 4;
    spec.direction_seed = 99;
    const auto base = planted_directions(spec);

    PlantedGeneratorSpec variant = spec;
    variant.jailbreak_direction_variant = 1;
    const auto rotated = planted_directions(variant);

    // same direction seed: same u_t and bases
    CHECK(base.toxic == rotated.toxic);
    CHECK(base.layer_base[0] == rotated.layer_base[0]);
    // variants 0 and 1 are exactly orthogonal unit directions
    CHECK(std::fabs(dot(base.jailbreak, rotated.jailbreak)) < 1e-6);
    CHECK(norm(rotated.jailbreak) == doctest::Approx(1.0).epsilon(1e-6));

    // different noise seed, same direction seed: directions stable
    PlantedGeneratorSpec reseeded = spec;
    reseeded.seed = 777;
    CHECK(planted_directions(reseeded).jailbreak == base.jailbreak);
}

TEST_CASE("jailbreak records retain the toxic offset by default") {
    PlantedGeneratorSpec spec;
    spec.seed = 5;
    spec.benign_count = 40;
    spec.harmful_count = 40;
    spec.jailbreak_count = 40;
    const auto dataset = synth(spec);
    const auto directions = planted_directions(spec);

    const auto mean_projection = [&](PromptCategory category, int layer,
                                     const EmbeddingVector& direction) {
        double acc = 0.0;
        int count = 0;
        for (const auto* record : of_category(dataset, category)) {
            acc += dot(record->layers[static_cast<std::size_t>(layer)], direction);
            ++count;
        }
        return acc / count;
    };

    const double base_proj = dot(directions.layer_base[spec.toxic_layer], directions.toxic);
    CHECK(mean_projection(PromptCategory::jailbreak, spec.toxic_layer, directions.toxic) -
              base_proj ==
          doctest::Approx(spec.alpha).epsilon(0.05));
    CHECK(mean_projection(PromptCategory::harmful, spec.toxic_layer, directions.toxic) -
              base_proj ==
          doctest::Approx(spec.alpha).epsilon(0.05));

    PlantedGeneratorSpec probe = spec;
    probe.jailbreak_retains_toxic = false;
    const auto probe_dataset = synth(probe);
    double acc = 0.0;
    int count = 0;
    for (const auto* record : of_category(probe_dataset, PromptCategory::jailbreak)) {
        acc += dot(record->layers[static_cast<std::size_t>(spec.toxic_layer)], directions.toxic);
        ++count;
    }
    CHECK(acc / count - base_proj == doctest::Approx(0.0).epsilon(0.05));
}

TEST_CASE("beta = 0 leaves jailbreak indistinguishable from harmful at the jailbreak layer") {
    PlantedGeneratorSpec spec;
    spec.seed = 6;
    spec.beta = 0.0;
    spec.benign_count = 60;
    spec.harmful_count = 60;
    spec.jailbreak_count = 60;
    const auto dataset = synth(spec);
    const auto directions = planted_directions(spec);

    double jailbreak_mean = 0.0, harmful_mean = 0.0;
    for (const auto* record : of_category(dataset, PromptCategory::jailbreak)) {
        jailbreak_mean += dot(record->layers[spec.jailbreak_layer], directions.jailbreak);
    }
    for (const auto* record : of_category(dataset, PromptCategory::harmful)) {
        harmful_mean += dot(record->layers[spec.jailbreak_layer], directions.jailbreak);
    }
    jailbreak_mean /= 60.0;
    harmful_mean /= 60.0;
    // mean separation within sampling noise of zero (component std is
    // sigma/sqrt(d); the mean of 60 tightens it further)
    const double tolerance = 4.0 * (spec.sigma / std::sqrt(64.0)) / std::sqrt(60.0) * 2.0;
    CHECK(std::fabs(jailbreak_mean - harmful_mean) <= tolerance);
}

TEST_CASE("invalid specs are rejected") {
    PlantedGeneratorSpec spec;
    spec.toxic_layer = 8; // == num_layers
    CHECK_THROWS_AS(synth(spec), Error);
    PlantedGeneratorSpec negative;
    negative.sigma = -0.1;
    CHECK_THROWS_AS(synth(negative), Error);
    PlantedGeneratorSpec bad_counts;
    bad_counts.benign_count = -1;
    CHECK_THROWS_AS(synth(bad_counts), Error);
}
