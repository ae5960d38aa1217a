#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "scwt/error.hpp"
#include "scwt/neural.hpp"

using namespace scwt;

namespace {

ConvNetSpec tiny_spec(int height, int width, int channels, std::vector<ConvBlockSpec> blocks, int latent) {
  ConvNetSpec s;
  s.input_height = height;
  s.input_width = width;
  s.input_channels = channels;
  s.blocks = std::move(blocks);
  s.latent_dim = latent;
  return s;
}

Image random_image(int h, int w, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img = Image::zeros(h, w, c);
  for (double& v : img.data) v = u(rng);
  return img;
}

double batch_loss(const ModelParams& p, std::span<const Sample> batch, const ClassWeights& w) {
  double total = 0.0;
  for (const auto& s : batch) total += weighted_cross_entropy(forward_pass(p, *s.image), s.label, w);
  return total / static_cast<double>(batch.size());
}

// Three-pattern image task: bright left half, right half or top half.
std::vector<Image> pattern_images(int per_class, std::vector<int>& labels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<Image> imgs;
  for (int k = 0; k < per_class; ++k) {
    for (int c = 0; c < 3; ++c) {
      Image img = Image::zeros(8, 8, 1);
      for (int h = 0; h < 8; ++h) {
        for (int w = 0; w < 8; ++w) {
          const bool on = (c == 0 && w < 4) || (c == 1 && w >= 4) || (c == 2 && h < 4);
          img.at(h, w, 0) = (on ? 1.0 : 0.0) + noise(rng);
        }
      }
      imgs.push_back(std::move(img));
      labels.push_back(c);
    }
  }
  return imgs;
}

}  // namespace

TEST_SUITE("neural") {
  TEST_CASE("class weights from counts") {
    const ClassWeights brainlat = compute_class_weights({15408, 12048, 21648});
    CHECK(brainlat[0] == doctest::Approx(1.405).epsilon(0.001 / 1.405));
    CHECK(brainlat[1] == doctest::Approx(1.797).epsilon(0.001 / 1.797));
    CHECK(brainlat[2] == 1.0);
    const ClassWeights iitd = compute_class_weights({11088, 10800, 9600});
    CHECK(iitd[0] == 1.0);
    CHECK(std::abs(iitd[1] - 1.027) <= 0.001);
    CHECK(std::abs(iitd[2] - 1.155) <= 0.001);
    CHECK(compute_class_weights({7, 7, 7}) == ClassWeights{1.0, 1.0, 1.0});
    CHECK_THROWS_AS(compute_class_weights({7, 0, 7}), ValidationError);
  }

  TEST_CASE("softmax") {
    const Probs p = softmax({1000.0, 1000.0, 1000.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0));
    const Probs q = softmax({0.0, std::log(2.0), std::log(3.0)});
    CHECK(q[0] == doctest::Approx(1.0 / 6.0));
    CHECK(q[2] == doctest::Approx(0.5));
  }

  TEST_CASE("zero output layer gives a uniform posterior") {
    std::mt19937_64 rng(1);
    ModelParams p = init_model(tiny_spec(8, 8, 2, {{3, 3}}, 4), 5);
    p.output = zeros_like(p.output);
    const Posterior post = forward_pass(p, random_image(8, 8, 2, rng));
    for (double v : post.probs) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  TEST_CASE("hand-evaluated 1x1 convolution network") {
    ModelParams p = init_model(tiny_spec(2, 2, 1, {{1, 1}}, 2), 0);
    p.tower.convs[0].weight = {0.5};
    p.tower.convs[0].bias = {0.25};
    p.tower.latent.weight = {1.0, -1.0};
    p.tower.latent.bias = {0.5, 0.2};
    p.output.weight = {1.0, 0.0, 0.0, 1.0, -1.0, 2.0};
    p.output.bias = {0.0, 0.1, 0.3};
    Image img = Image::zeros(2, 2, 1);
    img.data = {1.0, 2.0, 3.0, -4.0};
    // conv: 0.75 1.25 1.75 -1.75 -> relu/pool 1.75
    // latent: relu(1.75 + 0.5, -1.75 + 0.2) = (2.25, 0)
    // logits: (2.25, 0.1, -1.95)
    const Posterior post = forward_pass(p, img);
    CHECK(post.latent(0) == 2.25);
    CHECK(post.latent(1) == 0.0);
    const double e[3] = {std::exp(2.25), std::exp(0.1), std::exp(-1.95)};
    const double z = e[0] + e[1] + e[2];
    for (int i = 0; i < 3; ++i) CHECK(post.probs[i] == doctest::Approx(e[i] / z).epsilon(1e-14));
  }

  TEST_CASE("shape and numeric errors") {
    std::mt19937_64 rng(2);
    ModelParams p = init_model(tiny_spec(8, 8, 2, {{3, 3}, {2, 3}}, 4), 5);
    CHECK_THROWS_AS(forward_pass(p, random_image(8, 8, 1, rng)), ShapeError);
    p.tower.convs[1].weight[0] = INFINITY;
    try {
      forward_pass(p, random_image(8, 8, 2, rng));
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(e.layer() == 1);
    }
  }

  TEST_CASE("weighted cross entropy") {
    Posterior uniform;
    uniform.probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    CHECK(weighted_cross_entropy(uniform, 1, {1, 1, 1}) == doctest::Approx(std::log(3.0)));
    Posterior sure;
    sure.probs = {0.0, 1.0, 0.0};
    CHECK(weighted_cross_entropy(sure, 1, {1, 1, 1}) == 0.0);
    Posterior some;
    some.probs = {0.2, 0.7, 0.1};
    CHECK(weighted_cross_entropy(some, 0, {2, 1, 1}) == 2.0 * weighted_cross_entropy(some, 0, {1, 1, 1}));
    CHECK(std::isfinite(weighted_cross_entropy(sure, 0, {1, 1, 1})));
  }

  TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(7);
    const ModelParams p = init_model(tiny_spec(8, 8, 2, {{3, 3}, {4, 3}}, 5), 13);
    const std::vector<Image> imgs{random_image(8, 8, 2, rng), random_image(8, 8, 2, rng)};
    const std::vector<Sample> batch{{&imgs[0], 0}, {&imgs[1], 2}};
    const ClassWeights w{1.3, 1.0, 0.7};
    const GradientResult g = backward_gradients(p, batch, w);
    CHECK(g.loss == doctest::Approx(batch_loss(p, batch, w)).epsilon(1e-14));

    ModelParams probe = p;
    auto pv = probe.views();
    const auto gv = g.grads.views();
    const double h = 1e-4;
    std::size_t checked = 0;
    double worst = 0.0;
    for (std::size_t t = 0; t < pv.size(); ++t) {
      for (std::size_t i = 0; i < pv[t].size(); ++i) {
        const double keep = pv[t][i];
        pv[t][i] = keep + h;
        const double up = batch_loss(probe, batch, w);
        pv[t][i] = keep - h;
        const double down = batch_loss(probe, batch, w);
        pv[t][i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(gv[t][i]), 1e-7});
        worst = std::max(worst, std::abs(fd - gv[t][i]) / scale);
        ++checked;
      }
    }
    CHECK(checked == p.parameter_count());
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("batch gradient is the mean of per-sample gradients") {
    std::mt19937_64 rng(8);
    const ModelParams p = init_model(tiny_spec(8, 8, 1, {{2, 3}}, 3), 2);
    const std::vector<Image> imgs{random_image(8, 8, 1, rng), random_image(8, 8, 1, rng)};
    const std::vector<Sample> both{{&imgs[0], 1}, {&imgs[1], 0}};
    const ClassWeights w{1, 1, 1};
    const auto gb = backward_gradients(p, both, w);
    const auto g0 = backward_gradients(p, std::span(both).subspan(0, 1), w);
    const auto g1 = backward_gradients(p, std::span(both).subspan(1, 1), w);
    const auto vb = gb.grads.views();
    const auto v0 = g0.grads.views();
    const auto v1 = g1.grads.views();
    for (std::size_t t = 0; t < vb.size(); ++t) {
      for (std::size_t i = 0; i < vb[t].size(); ++i) CHECK(std::abs(vb[t][i] - 0.5 * (v0[t][i] + v1[t][i])) <= 1e-12);
    }

    // A class weight of 2 doubles every gradient.
    const auto g2 = backward_gradients(p, std::span(both).subspan(0, 1), {1, 2, 1});
    const auto v2 = g2.grads.views();
    for (std::size_t t = 0; t < v2.size(); ++t) {
      for (std::size_t i = 0; i < v2[t].size(); ++i) CHECK(v2[t][i] == doctest::Approx(2.0 * v0[t][i]).epsilon(1e-14));
    }
  }

  TEST_CASE("saturated predictions give vanishing gradients") {
    std::mt19937_64 rng(9);
    ModelParams p = init_model(tiny_spec(4, 4, 1, {{2, 3}}, 3), 4);
    p.output = zeros_like(p.output);
    p.output.bias = {0.0, 100.0, 0.0};
    const Image img = random_image(4, 4, 1, rng);
    const std::vector<Sample> batch{{&img, 1}};
    const auto g = backward_gradients(p, batch, {1, 1, 1});
    for (const auto& v : g.grads.views()) {
      for (double x : v) CHECK(std::abs(x) <= 1e-9);
    }
  }

  TEST_CASE("Adam") {
    std::vector<double> w{1.0, -2.0, 3.0};
    std::vector<double> g{0.0, 0.0, 0.0};
    AdamState s = AdamState::zeros_for({std::span<const double>(w)});
    adam_step({std::span<double>(w)}, {std::span<const double>(g)}, s, {});
    CHECK(w == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(s.m[0] == std::vector<double>{0, 0, 0});
    CHECK(s.v[0] == std::vector<double>{0, 0, 0});
    CHECK(s.step == 1);

    for (double gval : {1e-3, -0.5, 20.0}) {
      std::vector<double> x{0.0};
      std::vector<double> gx{gval};
      AdamState st = AdamState::zeros_for({std::span<const double>(x)});
      adam_step({std::span<double>(x)}, {std::span<const double>(gx)}, st, {0.01});
      CHECK(std::abs(x[0] + 0.01 * (gval > 0 ? 1.0 : -1.0)) <= 1e-6);
    }

    // f(w) = w^2 from w = 1 with lr 0.1, iterated by hand in long double.
    long double hw = 1.0L, hm = 0.0L, hv = 0.0L;
    std::vector<double> x{1.0};
    AdamState st = AdamState::zeros_for({std::span<const double>(x)});
    for (int k = 1; k <= 3; ++k) {
      const long double hg = 2.0L * hw;
      hm = 0.9L * hm + 0.1L * hg;
      hv = 0.999L * hv + 0.001L * hg * hg;
      const long double mhat = hm / (1.0L - std::pow(0.9L, k));
      const long double vhat = hv / (1.0L - std::pow(0.999L, k));
      hw -= 0.1L * mhat / (std::sqrt(vhat) + 1e-8L);

      std::vector<double> gx{2.0 * x[0]};
      adam_step({std::span<double>(x)}, {std::span<const double>(gx)}, st, {0.1});
      CHECK(std::abs(x[0] - static_cast<double>(hw)) <= 1e-10);
    }
    CHECK(x[0] == doctest::Approx(0.7).epsilon(0.01));

    std::vector<double> bad{NAN};
    const std::vector<double> before = x;
    CHECK_THROWS_AS(adam_step({std::span<double>(x)}, {std::span<const double>(bad)}, st, {0.1}), NumericError);
    CHECK(x == before);
    CHECK(st.step == 3);
  }

  TEST_CASE("early stopping fires 20 steps after the last improvement") {
    EarlyStopping es(20);
    int stopped_at = 0;
    for (int step = 1; step <= 100; ++step) {
      const double acc = step <= 7 ? 0.1 * step : 0.7;
      es.update(step, acc);
      if (es.should_stop()) {
        stopped_at = step;
        break;
      }
    }
    CHECK(es.best_step() == 7);
    CHECK(stopped_at == 27);
    CHECK_THROWS_AS(EarlyStopping(0), ValidationError);
  }

  TEST_CASE("separable pattern task is learned; training is seeded") {
    std::vector<int> labels;
    const auto imgs = pattern_images(10, labels, 3);
    std::vector<Sample> data;
    for (std::size_t i = 0; i < imgs.size(); ++i) data.push_back({&imgs[i], labels[i]});
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 8;
    cfg.max_steps = 150;
    cfg.patience = 30;
    cfg.seed = 4;
    const ConvNetSpec spec = tiny_spec(8, 8, 1, {{4, 3}}, 8);
    const auto a = train_with_early_stopping(spec, data, cfg);
    CHECK(a.history.best_val_accuracy == 1.0);
    CHECK(a.history.best_step < cfg.max_steps);
    CHECK(a.history.val_accuracy.size() == static_cast<std::size_t>(a.history.steps_run));

    const auto b = train_with_early_stopping(spec, data, cfg);
    CHECK(flatten_views(a.params.views()) == flatten_views(b.params.views()));
    CHECK(a.history.train_loss == b.history.train_loss);

    std::vector<Sample> two_classes;
    for (const auto& s : data) {
      if (s.label != 2) two_classes.push_back(s);
    }
    CHECK_THROWS_AS(train_with_early_stopping(spec, two_classes, cfg), ValidationError);
  }

  TEST_CASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "scwt_tests" / "ckpt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const ModelParams p = init_model(tiny_spec(8, 8, 3, {{3, 3}, {2, 5}}, 6), 99);
    save_checkpoint(dir / "m.ckpt", p, 12, 0.75);
    const ModelParams q = load_checkpoint(dir / "m.ckpt");
    CHECK(q.seed == 99);
    CHECK(q.tower.spec.to_json() == p.tower.spec.to_json());
    CHECK(flatten_views(q.views()) == flatten_views(p.views()));
  }

  TEST_CASE("initialization is seeded") {
    const ConvNetSpec spec = tiny_spec(8, 8, 1, {{2, 3}}, 3);
    const ModelParams a = init_model(spec, 1);
    const ModelParams b = init_model(spec, 1);
    const ModelParams c = init_model(spec, 2);
    CHECK(flatten_views(a.views()) == flatten_views(b.views()));
    CHECK(flatten_views(a.views()) != flatten_views(c.views()));
  }
}
