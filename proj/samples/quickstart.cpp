// Train a small unfolded detector on simulated one-bit data and compare it
// with the coherent relaxed-ML baseline.

#include <cstdio>

#include "lordnet/lordnet.hpp"

int main() {
  using namespace lordnet;

  const double snr_db = 8.0;
  const auto theta = make_system(sample_rayleigh_channel(16, 4, 1), snr_db);
  const auto train_set = generate_dataset(theta, Constellation::bpsk(), 256, 2, {snr_db});
  const auto test_set = generate_dataset(theta, Constellation::bpsk(), 1024, 3, {snr_db});
  const auto validation = generate_dataset(theta, Constellation::bpsk(), 256, 4, {snr_db});

  TrainConfig cfg;
  cfg.L = 20;
  cfg.epochs_stage1 = 60;
  cfg.epochs_stage2 = 60;
  cfg.stage1_batch_size = 32;
  cfg.batch_size = 64;
  cfg.seed = 5;
  const auto model = train(train_set, cfg);

  const double step = grid_search_step(theta, validation, default_step_grid());
  std::printf("unfolded detector BER:   %.4f\n", evaluate_errors(model.theta, model.phi, test_set).rate());
  std::printf("coherent relaxed ML BER: %.4f (step %g)\n", relaxed_errors(theta, test_set, kNmlIterations, step).rate(),
              step);

  for (const auto& p : per_layer_ber(model.theta, model.phi, test_set).points)
    if (static_cast<int>(p.axis_value) % 5 == 0) std::printf("  layer %2d: %.4f\n", static_cast<int>(p.axis_value), p.ber);
}
