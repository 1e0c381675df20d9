// End-to-end run on a synthetic corpus: generate, self-label, compare with
// the supervised baseline, then summarize sentiment and topics per party.
#include <cstdlib>
#include <iostream>

#include "polsent/baseline.hpp"
#include "polsent/selflabel.hpp"
#include "polsent/synthgen.hpp"
#include "polsent/topics.hpp"

using namespace polsent;

int main(int argc, char** argv) {
  try {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 11;

    auto spec = GenSpec::defaults(seed);
    spec.holdout_docs = 400;
    auto g = generate(spec);
    DocumentSet seeds, unlabeled;
    for (const auto& d : g.corpus.documents) (d.label ? seeds : unlabeled).documents.push_back(d);
    std::cout << "corpus: " << g.corpus.size() << " posts, " << seeds.size() << " hand-labeled, "
              << g.holdout.size() << " hold-out\n\n";

    SelfLabelConfig cfg;
    cfg.schedule.batch_sizes = {100, 400, 800};
    auto res = run_schedule(seeds, unlabeled, g.holdout, cfg);
    for (const auto& r : res.audit.records()) {
      std::cout << (r.final_pass ? "final pass" : "batch " + std::to_string(r.iteration)) << ": "
                << r.batch_ids.size() << " posts, hold-out macro-F1 "
                << format_fixed(r.after ? r.after->macro_f1 : 0.0, 4) << (r.accepted ? "" : " (rejected)")
                << "\n";
    }

    const auto prep = PrepConfig::defaults();
    auto train = run_pipeline(seeds.documents, prep);
    auto test = run_pipeline(g.holdout.documents, prep);
    std::vector<ProcessedDoc> fit = train;
    for (const auto& p : run_pipeline(unlabeled.documents, prep)) fit.push_back(p);
    Featurizer feat(fit, FeatureConfig{});
    std::vector<Label> ytrain, ytest;
    for (const auto& d : seeds.documents) ytrain.push_back(*d.label);
    for (const auto& d : g.holdout.documents) ytest.push_back(*d.label);
    auto svm = train_svm<SparseVector>(feat.rows(train), ytrain, feat.dim());
    auto pred = predict<SparseVector>(svm, feat.rows(test));
    auto svm_cm = confusion(std::span<const Label>(pred), std::span<const Label>(ytest));
    std::cout << "\nself-labeling hold-out macro-F1 " << format_fixed(res.final_score->macro_f1, 4)
              << ", SVM on the seeds alone " << format_fixed(macro_f1(svm_cm), 4) << "\n\n";
    std::cout << render_metrics(res.final_score->cm) << "\n";

    std::cout << render_table(aggregate_sentiment(res.labeled)) << "\n";

    auto lda = LdaParams::with_topics(2);
    lda.iters = 200;
    for (const auto& p : analyze_negative(res.labeled, prep, lda, 5, 2, 3)) {
      std::cout << to_string(p.party) << " (" << p.documents << " negative posts)\n";
      for (std::size_t k = 0; k < p.topics.size(); ++k) {
        std::cout << "  topic " << k + 1 << ":";
        for (const auto& w : p.topics[k]) std::cout << ' ' << w.word;
        std::cout << "\n";
      }
      for (const auto& [gram, count] : p.grams.entries) std::cout << "  \"" << gram << "\" x" << count << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
