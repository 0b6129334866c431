#include <benchmark/benchmark.h>

#include <sstream>

#include "fame/calibration.hpp"
#include "fame/inference.hpp"
#include "fame/pipeline.hpp"
#include "fame/rng.hpp"
#include "fame/synthetic.hpp"

namespace {

fame::SyntheticCorpus& corpus() {
    static fame::SyntheticCorpus data = [] {
        fame::SyntheticConfig config;
        config.lines = 20000;
        config.seed = 3;
        return fame::generate_synthetic(config);
    }();
    return data;
}

fame::ModelBundle& bundle() {
    static fame::ModelBundle model = [] {
        fame::SyntheticCorpus data = corpus(); // copy; setup annotates event ids
        fame::PipelineConfig config;
        config.k = 80;
        config.seed = 4;
        return std::move(fame::run_setup(data.corpus, config).bundle);
    }();
    return model;
}

} // namespace

static void BM_Featurize(benchmark::State& state) {
    fame::FeaturizerConfig cfg;
    const std::string& line = corpus().corpus[42].raw;
    for (auto _ : state) {
        auto fv = fame::featurize(line, cfg);
        benchmark::DoNotOptimize(fv);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Featurize);

static void BM_DrainLearn(benchmark::State& state) {
    const auto& lines = corpus().corpus;
    for (auto _ : state) {
        state.PauseTiming();
        fame::TemplateTable table;
        state.ResumeTiming();
        for (std::size_t i = 0; i < 2000; ++i) table.learn(lines[i].raw);
        benchmark::DoNotOptimize(table.size());
    }
    state.SetItemsProcessed(state.iterations() * 2000);
}
BENCHMARK(BM_DrainLearn)->Unit(benchmark::kMillisecond);

static void BM_DrainMatch(benchmark::State& state) {
    const auto& lines = corpus().corpus;
    fame::TemplateTable table;
    for (std::size_t i = 0; i < 5000; ++i) table.learn(lines[i].raw);
    table.freeze();
    std::size_t cursor = 5000;
    for (auto _ : state) {
        auto hit = table.match(lines[cursor].raw);
        benchmark::DoNotOptimize(hit);
        cursor = cursor + 1 < lines.size() ? cursor + 1 : 5000;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DrainMatch);

static void BM_FocalGradient(benchmark::State& state) {
    fame::FocalLossConfig cfg;
    fame::Rng rng(9);
    for (auto _ : state) {
        double g = fame::focal_loss_gradient(rng.unit() * 8.0 - 4.0,
                                             static_cast<int>(rng.below(2)), cfg);
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_FocalGradient);

static void BM_Classify(benchmark::State& state) {
    const fame::ModelBundle& model = bundle();
    const auto& lines = corpus().corpus;
    std::size_t cursor = 0;
    for (auto _ : state) {
        fame::Verdict v = fame::classify(model, lines[cursor].raw);
        benchmark::DoNotOptimize(v);
        cursor = cursor + 1 < lines.size() ? cursor + 1 : 0;
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Classify);

static void BM_ClassifyStream(benchmark::State& state) {
    const fame::ModelBundle& model = bundle();
    std::ostringstream input;
    for (std::size_t i = 0; i < 10000; ++i) input << corpus().corpus[i].raw << '\n';
    std::string block = input.str();
    for (auto _ : state) {
        std::istringstream in(block);
        std::ostringstream sink;
        fame::StreamSummary summary =
            fame::classify_stream(model, in, sink, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(summary.lines);
    }
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_ClassifyStream)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_CalibrateThreshold(benchmark::State& state) {
    fame::Rng rng(17);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 4000; ++i) {
        scores.push_back(rng.unit());
        labels.push_back(rng.unit() < 0.2 ? 1 : 0);
    }
    for (auto _ : state) {
        auto res = fame::calibrate_threshold(scores, labels);
        benchmark::DoNotOptimize(res.tau);
    }
}
BENCHMARK(BM_CalibrateThreshold)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
