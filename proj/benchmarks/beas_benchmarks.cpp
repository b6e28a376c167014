#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "beas/attacks.hpp"
#include "beas/dp.hpp"
#include "beas/ledger/channel.hpp"
#include "beas/nn/network.hpp"
#include "beas/robust_aggregation.hpp"

namespace {

using namespace beas;

std::vector<double> normals(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

nn::Dataset blob_data(std::size_t rows, std::size_t dim, std::size_t classes, Rng& rng) {
  std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
  std::vector<int> labels(rows);
  for (auto& l : labels) l = lab(rng);
  return {dim, classes, normals(rows * dim, rng), labels};
}

// One client's round on an MNIST-sized MLP: 250 rows, 5 epochs.
void BM_LocalTrain(benchmark::State& state) {
  Rng rng(1);
  const nn::ModelSpec spec{{784, 64, 64, 10}, nn::Activation::kRelu};
  const auto model = nn::ModelParams::glorot(spec, rng);
  const auto data = blob_data(250, 784, 10, rng);
  nn::TrainOptions opt;
  opt.epochs = static_cast<int>(state.range(0));
  opt.batch_size = 32;
  for (auto _ : state) benchmark::DoNotOptimize(nn::local_train(model, data, opt));
  state.SetItemsProcessed(state.iterations() * 250 * state.range(0));
}
BENCHMARK(BM_LocalTrain)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_MultiKrum(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 55050;  // 784-64-64-10 parameter count
  std::vector<agg::Update> u;
  for (std::size_t i = 0; i < n; ++i) {
    ClientId id;
    id.bytes[15] = static_cast<std::uint8_t>(i);
    u.push_back({id, 1, nn::GradientVector(normals(dim, rng, 0.01), 7), 1});
  }
  const std::size_t f = (n - 3) / 2;
  for (auto _ : state) benchmark::DoNotOptimize(agg::multikrum_select(u, f));
}
BENCHMARK(BM_MultiKrum)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Prune(benchmark::State& state) {
  Rng rng(3);
  const nn::GradientVector g(normals(55050, rng), 7);
  for (auto _ : state) benchmark::DoNotOptimize(dp::prune(g, 0.75));
}
BENCHMARK(BM_Prune)->Unit(benchmark::kMicrosecond);

void BM_BlockHash(benchmark::State& state) {
  Rng rng(4);
  ledger::Network net(5);
  const auto id = net.register_identity();
  const nn::GradientVector g(normals(static_cast<std::size_t>(state.range(0)), rng), 7);
  const auto block = ledger::make_local_block(id, "bench", 1, 100, g);
  for (auto _ : state) benchmark::DoNotOptimize(block.hash());
  state.SetBytesProcessed(state.iterations() * state.range(0) * 8);
}
BENCHMARK(BM_BlockHash)->Arg(1000)->Arg(55050)->Unit(benchmark::kMicrosecond);

void BM_GradientMatch(benchmark::State& state) {
  Rng rng(6);
  const nn::ModelSpec spec{{64, 32, 2}, nn::Activation::kSigmoid};
  const auto model = nn::ModelParams::glorot(spec, rng);
  const nn::GradientVector g(normals(spec.parameter_count(), rng, 0.01), spec.fingerprint());
  nn::RowMatrix x(1, 64), y(1, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 0.5;
  y << 0.3, -0.3;
  for (auto _ : state) benchmark::DoNotOptimize(attacks::gradient_match(model, g, x, y));
}
BENCHMARK(BM_GradientMatch)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
