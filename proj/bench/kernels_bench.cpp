#include "biolabel/evaluation/evaluation.hpp"
#include "biolabel/pipeline/pipeline.hpp"

#include "fixtures.hpp"
#include "synthetic.hpp"

#include <benchmark/benchmark.h>

#include <omp.h>

using namespace biolabel;

namespace {

const features::Catalog& catalog() {
    static const auto c = features::build_catalog(features::Lexicon::builtin());
    return c;
}

const learners::TrainingMatrix& ground_truth() {
    static const auto m = learners::TrainingMatrix::from_dataset(
        groundtruth::load_dataset(testing::data_dir() / "ground_truth.jsonl"), catalog());
    return m;
}

int threads(const benchmark::State& state) {
    return state.range(0) == 0 ? omp_get_num_procs() : static_cast<int>(state.range(0));
}

// range(0): 1 for the serial path, 0 for every core.
void BM_CrossValidate(benchmark::State& state) {
    const auto exec = state.range(0) == 1 ? evaluation::Execution::Serial : evaluation::Execution::Parallel;
    omp_set_num_threads(threads(state));
    const std::vector<evaluation::NamedLearner> svm = {
        {"svm", evaluation::algorithm_learner(learners::Algorithm::Svm)}};
    for (auto _ : state) {
        auto r = evaluation::cross_validate(ground_truth(), svm, evaluation::kTableLabels, 10, 2, 2024, exec);
        benchmark::DoNotOptimize(r);
    }
}

void BM_TrainBundle(benchmark::State& state) {
    omp_set_num_threads(threads(state));
    for (auto _ : state) {
        auto b = learners::train_bundle(ground_truth(), learners::Algorithm::Svm, {}, 2024);
        benchmark::DoNotOptimize(b);
    }
}

void BM_ClassifyArchive(benchmark::State& state) {
    static const testing::ScratchDir dir;
    static const auto jar = [] {
        const auto p = dir / "synthetic.jar";
        testing::write_bytes(p, testing::synthetic_archive(200, 100));
        return p;
    }();
    static const auto bundle = learners::train_bundle(ground_truth(), learners::Algorithm::Svm, {}, 2024);
    pipeline::ClassifyOptions opts;
    opts.jobs = static_cast<std::size_t>(threads(state));
    std::size_t methods = 0;
    for (auto _ : state) {
        const auto stats =
            pipeline::classify_archive(jar, bundle, catalog(), [](const pipeline::MethodResult&) {}, opts);
        methods += stats.total_methods;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(methods));
}

}  // namespace

BENCHMARK(BM_CrossValidate)->ArgName("threads")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainBundle)->ArgName("threads")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyArchive)->ArgName("threads")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
