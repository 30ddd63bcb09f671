// Keyword and paraphrase suggestions for a seed template, then apply the
// first of each and compare accuracies.
//
//   sample_recommend [config/workbench.json]

#include <promptaid/promptaid.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace promptaid;
    try {
        const auto cfg = load_config(argc > 1 ? argv[1] : "config/workbench.json");
        const auto ds = load_dataset(cfg.datasets.front());
        const auto model = make_model_client(cfg.models.front(), cfg.base_dir);
        const Embedder embedder(make_embedding_backend(cfg.embedding));
        const auto corpus = build_corpus_index(load_word_corpus(cfg.corpus), ds.task_type, embedder);

        const auto seed = make_template("P1", ds.seed_templates.front().text, Origin::Seed);
        std::cout << seed.text << "  " << evaluate_template(seed, ds, *model).accuracy << "\n";

        const auto words = content_words(seed.text);
        std::cout << "mutable words:";
        for (const auto& w : words) std::cout << " " << w;
        std::cout << "\n";

        const auto keywords = suggest_keywords(seed, "label", ds.task_type, embedder, corpus);
        for (const auto& k : keywords) std::cout << "  " << to_string(k.bucket) << " " << k.word << " " << k.distance << "\n";
        const auto topic = apply_keyword(seed, "label", "topic", "P2");
        std::cout << topic.text << "  " << evaluate_template(topic, ds, *model).accuracy << "\n";

        for (const auto& p : suggest_paraphrases(topic, *model)) {
            const auto v = apply_paraphrase(topic, p.text, "P3");
            std::cout << "  " << p.distance_to_seed << "  " << v.text << "  " << evaluate_template(v, ds, *model).accuracy
                      << "\n";
        }
    } catch (const Error& e) {
        std::cerr << to_string(e.code()) << ": " << e.message() << "\n";
        return 1;
    }
}
