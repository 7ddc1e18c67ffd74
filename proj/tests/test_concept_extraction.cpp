#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "conceptguard/concept_extraction.hpp"
#include "conceptguard/rng.hpp"
#include "conceptguard/synth.hpp"
#include "conceptguard/vector_ops.hpp"

using namespace conceptguard;

namespace {

PromptEmbeddingRecord make_record(const std::string& id, PromptCategory category,
                                  std::vector<EmbeddingVector> layers) {
    PromptEmbeddingRecord record;
    record.prompt_id = id;
    record.category = category;
    record.layers = std::move(layers);
    return record;
}

std::vector<PromptEmbeddingRecord> random_side(std::uint64_t seed, PromptCategory category,
                                               int count, int num_layers, int dim) {
    Rng rng(seed);
    std::vector<PromptEmbeddingRecord> records;
    for (int r = 0; r < count; ++r) {
        std::vector<EmbeddingVector> layers;
        for (int l = 0; l < num_layers; ++l) {
            EmbeddingVector vec(static_cast<std::size_t>(dim));
            for (auto& v : vec) v = static_cast<float>(rng.next_gaussian());
            layers.push_back(std::move(vec));
        }
        records.push_back(make_record(std::string(to_string(category)) + std::to_string(r),
                                      category, std::move(layers)));
    }
    return records;
}

} // namespace

TEST_CASE("form_pairs bookkeeping") {
    const auto pos = random_side(1, PromptCategory::harmful, 3, 2, 4);
    const auto neg = random_side(2, PromptCategory::benign, 3, 2, 4);
    const auto pairs = form_pairs(pos, neg, 7);
    CHECK(pairs.pair_count() == 3);

    std::set<std::size_t> pos_used, neg_used;
    for (const auto& [p, n] : pairs.pairing) {
        pos_used.insert(p);
        neg_used.insert(n);
    }
    CHECK(pos_used.size() == 3); // a permutation matching
    CHECK(neg_used.size() == 3);
}

TEST_CASE("form_pairs truncates to the smaller side") {
    const auto pos = random_side(3, PromptCategory::harmful, 5, 2, 4);
    const auto neg = random_side(4, PromptCategory::benign, 3, 2, 4);
    CHECK(form_pairs(pos, neg, 7).pair_count() == 3);
}

TEST_CASE("form_pairs is deterministic per seed") {
    const auto pos = random_side(5, PromptCategory::harmful, 8, 2, 4);
    const auto neg = random_side(6, PromptCategory::benign, 8, 2, 4);
    const auto first = form_pairs(pos, neg, 42);
    const auto second = form_pairs(pos, neg, 42);
    CHECK(first.pairing == second.pairing);
    const auto other_seed = form_pairs(pos, neg, 43);
    CHECK(first.pairing != other_seed.pairing); // overwhelmingly likely for 8!
}

TEST_CASE("form_pairs error cases") {
    const auto pos = random_side(7, PromptCategory::harmful, 2, 2, 4);
    CHECK_THROWS_AS(form_pairs(pos, {}, 1), Error);
    CHECK_THROWS_AS(form_pairs({}, pos, 1), Error);
    const auto same = random_side(8, PromptCategory::harmful, 2, 2, 4);
    CHECK_THROWS_AS(form_pairs(pos, same, 1), Error); // categories must differ

    auto mixed = random_side(9, PromptCategory::benign, 3, 2, 4);
    mixed[1].category = PromptCategory::jailbreak;
    CHECK_THROWS_AS(form_pairs(pos, mixed, 1), Error); // sides must be homogeneous
}

TEST_CASE("difference_matrix rows in pairing order") {
    const auto pos = std::vector<PromptEmbeddingRecord>{
        make_record("h0", PromptCategory::harmful, {{2, 0}})};
    const auto neg = std::vector<PromptEmbeddingRecord>{
        make_record("b0", PromptCategory::benign, {{1, 0}})};
    const auto pairs = form_pairs(pos, neg, 0);
    const auto rows = difference_matrix(pairs, 0);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == EmbeddingVector{1, 0});

    CHECK_THROWS_AS(difference_matrix(pairs, 1), Error);
    CHECK_THROWS_AS(difference_matrix(pairs, -1), Error);
}

TEST_CASE("difference of identical members is the zero row") {
    const auto shared = EmbeddingVector{0.5f, -1.5f, 2.0f};
    const auto pos = std::vector<PromptEmbeddingRecord>{
        make_record("h0", PromptCategory::harmful, {shared})};
    const auto neg = std::vector<PromptEmbeddingRecord>{
        make_record("b0", PromptCategory::benign, {shared})};
    const auto rows = difference_matrix(form_pairs(pos, neg, 0), 0);
    CHECK(rows[0] == EmbeddingVector{0, 0, 0});
}

TEST_CASE("extract_concept on fixed pairs") {
    // single pair, diff [3,4] => [0.6, 0.8]
    const auto pos = std::vector<PromptEmbeddingRecord>{
        make_record("h0", PromptCategory::harmful, {{3, 4}})};
    const auto neg = std::vector<PromptEmbeddingRecord>{
        make_record("b0", PromptCategory::benign, {{0, 0}})};
    const auto subspace = extract_concept(form_pairs(pos, neg, 0), 0);
    CHECK(subspace.direction[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(subspace.direction[1] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(subspace.layer == 0);
    CHECK(subspace.sign_anchor == SignAnchor::positive_class_mean);
}

TEST_CASE("extract_concept with parallel difference rows") {
    const auto pos = std::vector<PromptEmbeddingRecord>{
        make_record("h0", PromptCategory::harmful, {{1, 2}}),
        make_record("h1", PromptCategory::harmful, {{2, 4}})};
    const auto neg = std::vector<PromptEmbeddingRecord>{
        make_record("b0", PromptCategory::benign, {{0, 0}}),
        make_record("b1", PromptCategory::benign, {{0, 0}})};
    const auto subspace = extract_concept(form_pairs(pos, neg, 3), 0);
    const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
    CHECK(subspace.direction[0] == doctest::Approx(inv_sqrt5).epsilon(1e-6));
    CHECK(subspace.direction[1] == doctest::Approx(2 * inv_sqrt5).epsilon(1e-6));
}

TEST_CASE("extract_concept sign convention holds on random data") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pos = random_side(100 + seed, PromptCategory::harmful, 10, 3, 6);
        const auto neg = random_side(200 + seed, PromptCategory::benign, 10, 3, 6);
        const auto pairs = form_pairs(pos, neg, seed);
        const auto subspace = extract_concept(pairs, 1);
        const auto rows = difference_matrix(pairs, 1);
        double mean_projection = 0.0;
        for (const auto& row : rows) mean_projection += dot(row, subspace.direction);
        mean_projection /= static_cast<double>(rows.size());
        CHECK(mean_projection >= 0.0);
    }
}

TEST_CASE("extract_concept is scale invariant and seed deterministic") {
    auto pos = random_side(31, PromptCategory::harmful, 12, 2, 8);
    auto neg = random_side(32, PromptCategory::benign, 12, 2, 8);
    const auto base = extract_concept(form_pairs(pos, neg, 9), 1);
    const auto repeat = extract_concept(form_pairs(pos, neg, 9), 1);
    CHECK(std::memcmp(base.direction.data(), repeat.direction.data(),
                      base.direction.size() * sizeof(float)) == 0);

    auto pos_scaled = pos;
    auto neg_scaled = neg;
    for (auto* side : {&pos_scaled, &neg_scaled}) {
        for (auto& record : *side) {
            for (auto& layer : record.layers) {
                for (auto& v : layer) v *= 3.0f;
            }
        }
    }
    const auto scaled = extract_concept(form_pairs(pos_scaled, neg_scaled, 9), 1);
    for (std::size_t i = 0; i < base.direction.size(); ++i) {
        CHECK(scaled.direction[i] == doctest::Approx(base.direction[i]).epsilon(1e-6));
    }
}

TEST_CASE("extract_concept recovers a planted direction") {
    PlantedGeneratorSpec spec;
    spec.seed = 77;
    spec.sigma = 0.1; // alpha/sigma = 10
    const auto dataset = synth(spec);
    const auto planted = planted_directions(spec);

    std::vector<PromptEmbeddingRecord> harmful, benign;
    for (const auto& record : dataset.records) {
        if (record.category == PromptCategory::harmful) harmful.push_back(record);
        if (record.category == PromptCategory::benign) benign.push_back(record);
    }
    const auto subspace = extract_concept(form_pairs(harmful, benign, 5), spec.toxic_layer);
    CHECK(std::fabs(dot(subspace.direction, planted.toxic)) >= 0.99);
}

TEST_CASE("extract_concept rejects coinciding sides") {
    const auto shared = EmbeddingVector{1.0f, 2.0f};
    const auto pos = std::vector<PromptEmbeddingRecord>{
        make_record("h0", PromptCategory::harmful, {shared})};
    const auto neg = std::vector<PromptEmbeddingRecord>{
        make_record("b0", PromptCategory::benign, {shared})};
    try {
        extract_concept(form_pairs(pos, neg, 0), 0);
        FAIL("expected AllZeroRows");
    } catch (const Error& error) {
        CHECK(error.code() == errc::all_zero_rows);
    }
}

TEST_CASE("map_to_tokens identity projection") {
    const std::vector<std::string> vocab{"tok0", "tok1", "tok2"};
    const std::vector<float> identity{1, 0, 0, 0, 1, 0, 0, 0, 1};
    ConceptSubspace subspace{0, {0, 1, 0}, SignAnchor::positive_class_mean};

    const auto top = map_to_tokens(subspace, identity, vocab, 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].token_id == 1);
    CHECK(top[0].token_text == "tok1");
    CHECK(top[0].score == doctest::Approx(1.0));
}

TEST_CASE("map_to_tokens antisymmetry and ordering") {
    Rng rng(55);
    const int vocab_size = 17, dim = 5;
    std::vector<std::string> vocab;
    std::vector<float> weights(static_cast<std::size_t>(vocab_size) * dim);
    for (int t = 0; t < vocab_size; ++t) vocab.push_back("tok" + std::to_string(t));
    for (auto& w : weights) w = static_cast<float>(rng.next_gaussian());

    ConceptSubspace subspace{0, {}, SignAnchor::positive_class_mean};
    subspace.direction.resize(dim);
    for (auto& v : subspace.direction) v = static_cast<float>(rng.next_gaussian());

    const auto ranked = map_to_tokens(subspace, weights, vocab, vocab_size);
    for (std::size_t i = 0; i + 1 < ranked.size(); ++i) {
        CHECK(ranked[i].score >= ranked[i + 1].score);
    }

    ConceptSubspace negated = subspace;
    for (auto& v : negated.direction) v = -v;
    const auto reversed = map_to_tokens(negated, weights, vocab, vocab_size);
    CHECK(ranked.front().token_id == reversed.back().token_id);
    CHECK(ranked.back().token_id == reversed.front().token_id);
}

TEST_CASE("vocab projection sidecar loading") {
    namespace fs = std::filesystem;
    const auto path =
        (fs::temp_directory_path() / ("cg_vocab_core_" + std::to_string(::getpid()) + ".txt"))
            .string();
    {
        std::ofstream out(path);
        out << "{\"vocab\":2,\"dim\":3}\n"
            << "hello 1 0 0\n"
            << "world 0 0.5 0\n";
    }
    const auto projection = load_vocab_projection(path);
    CHECK(projection.dim == 3);
    CHECK(projection.tokens == std::vector<std::string>{"hello", "world"});
    CHECK(projection.output_embedding[4] == 0.5f);

    ConceptSubspace subspace{0, {0, 1, 0}, SignAnchor::positive_class_mean};
    const auto top = map_to_tokens(subspace, projection.output_embedding, projection.tokens, 1);
    CHECK(top[0].token_text == "world");
    fs::remove(path);

    // header/token-count disagreement
    {
        std::ofstream out(path);
        out << "{\"vocab\":3,\"dim\":3}\n"
            << "only 1 0 0\n";
    }
    CHECK_THROWS_AS(load_vocab_projection(path), Error);
    fs::remove(path);
    CHECK_THROWS_AS(load_vocab_projection("/nonexistent/vocab.txt"), Error);
}

TEST_CASE("map_to_tokens breaks ties by token id and validates k") {
    const std::vector<std::string> vocab{"tok0", "tok1", "tok2"};
    const std::vector<float> tied{1, 0, 1, 0, 0, 1}; // tokens 0 and 1 both score 1
    ConceptSubspace subspace{0, {1, 0}, SignAnchor::positive_class_mean};
    const auto top = map_to_tokens(subspace, tied, vocab, 2);
    CHECK(top[0].token_id == 0);
    CHECK(top[1].token_id == 1);

    CHECK_THROWS_AS(map_to_tokens(subspace, tied, vocab, 4), Error);
    CHECK(kDefaultTopTokens == 4);
}
