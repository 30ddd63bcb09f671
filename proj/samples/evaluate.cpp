// Evaluate one template against a dataset and print accuracy and the
// confusion matrix.
//
//   sample_evaluate [data/ag_news/manifest.json] [data/mock/roberta.json]

#include <promptaid/promptaid.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace promptaid;
    const std::string manifest = argc > 1 ? argv[1] : "data/ag_news/manifest.json";
    const std::string fixture = argc > 2 ? argv[2] : "data/mock/roberta.json";
    try {
        const auto ds = load_dataset(manifest);
        MockModelClient model(load_mock_fixture(fixture));

        const auto t = make_template("P1", "What label best describes this news article? [text]", Origin::Seed);
        const auto r = evaluate_template(t, ds, model);

        std::cout << "accuracy " << r.accuracy << "\n";
        for (std::size_t g = 0; g < r.confusion.labels.size(); ++g) {
            std::cout << r.confusion.labels[g] << ":";
            for (long c : r.confusion.counts[g]) std::cout << " " << c;
            std::cout << "\n";
        }
        for (const auto& label : ds.classes)
            std::cout << label << " precision " << r.precision.at(label) << " recall " << r.recall.at(label) << "\n";
    } catch (const Error& e) {
        std::cerr << to_string(e.code()) << ": " << e.message() << "\n";
        return 1;
    }
}
