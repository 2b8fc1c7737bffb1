#include <gtest/gtest.h>

#include <numeric>

#include "goalrec/encoding.hpp"

using namespace goalrec;

namespace {

GroundAction action(std::string name, std::vector<std::string> args = {}) {
  GroundAction a;
  a.name = std::move(name);
  a.args = std::move(args);
  return a;
}

}  // namespace

TEST(Coords, ShortWalkIsPadded) {
  const std::vector<Cell> obs{{0, 0}, {1, 0}, {1, 1}};
  const auto f = encode_coords(obs, 4, 2, 10);
  ASSERT_EQ(f.size(), 20u);
  const std::vector<double> head{0.25, 0.5, 0.5, 0.5, 0.5, 1.0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(f[i], head[i]);
  for (std::size_t i = 6; i < 20; ++i) EXPECT_EQ(f[i], 0.0);
}

TEST(Coords, LongWalkKeepsEvenlySpacedPositions) {
  std::vector<Cell> obs;
  for (int i = 0; i < 20; ++i) obs.push_back({i, 0});
  EXPECT_EQ(coordinate_indices(20, 10), (std::vector<std::size_t>{1, 3, 5, 7, 9, 11, 13, 15, 17, 19}));
  const auto f = encode_coords(obs, 20, 1, 10);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_DOUBLE_EQ(f[2 * k], (2.0 * k + 2.0) / 20.0);
    EXPECT_EQ(f[2 * k + 1], 1.0);
  }
}

TEST(Coords, IndicesAlwaysEndAtLastAndIncrease) {
  for (std::size_t len = 1; len < 100; ++len)
    for (std::size_t m : {1u, 3u, 10u}) {
      const auto idx = coordinate_indices(len, m);
      ASSERT_EQ(idx.size(), std::min(len, m));
      EXPECT_EQ(idx.back(), len - 1);
      for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LT(idx[i - 1], idx[i]);
    }
}

TEST(Coords, DegenerateWalkRepeats) {
  const std::vector<Cell> obs(4, Cell{2, 3});
  const auto f = encode_coords(obs, 8, 8, 10);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(f[2 * k], 3.0 / 8.0);
    EXPECT_EQ(f[2 * k + 1], 4.0 / 8.0);
  }
}

TEST(Coords, Errors) {
  EXPECT_THROW(encode_coords(std::vector<Cell>{}, 4, 4, 10), InvalidArgument);
  EXPECT_THROW(encode_coords(std::vector<Cell>{{0, 0}}, 4, 4, 0), InvalidArgument);
}

TEST(OneHot, ShiftAugmentation) {
  const OneHotVocab vocab({"a", "b"}, {}, 0);
  ASSERT_EQ(vocab.width(), 2u);
  const std::vector<GroundAction> seq{action("a"), action("b")};
  const auto out = encode_onehot(seq, vocab, 4, true);
  ASSERT_EQ(out.size(), 3u);
  const std::vector<std::vector<double>> want{
      {1, 0, 0, 1, 0, 0, 0, 0},
      {0, 0, 1, 0, 0, 1, 0, 0},
      {0, 0, 0, 0, 1, 0, 0, 1},
  };
  EXPECT_EQ(out, want);
  EXPECT_EQ(encode_onehot(seq, vocab, 4, false), std::vector<std::vector<double>>{want[0]});
}

TEST(OneHot, FullLengthHasOneCopy) {
  const OneHotVocab vocab({"a", "b"}, {}, 0);
  const std::vector<GroundAction> seq{action("a"), action("b"), action("a")};
  EXPECT_EQ(encode_onehot(seq, vocab, 3, true).size(), 1u);
}

TEST(OneHot, ArgumentSlots) {
  const OneHotVocab vocab({"stack", "pick-up"}, {"a", "b", "c"}, 2);
  ASSERT_EQ(vocab.width(), 2u + 2u * 3u);
  std::vector<double> f(vocab.width());
  vocab.encode_into(action("stack", {"c", "a"}), f);
  // indices follow the order the symbols were given in
  EXPECT_EQ(f, (std::vector<double>{1, 0, 0, 0, 1, 1, 0, 0}));
}

TEST(OneHot, Errors) {
  const OneHotVocab vocab({"a"}, {"x"}, 1);
  const std::vector<GroundAction> unknown{action("z")};
  EXPECT_THROW(encode_onehot(unknown, vocab, 2, false), InvalidArgument);
  const std::vector<GroundAction> bad_obj{action("a", {"y"})};
  EXPECT_THROW(encode_onehot(bad_obj, vocab, 2, false), InvalidArgument);
  const std::vector<GroundAction> too_long{action("a", {"x"}), action("a", {"x"}), action("a", {"x"})};
  EXPECT_THROW(encode_onehot(too_long, vocab, 2, false), InvalidArgument);
}

TEST(OneHot, TaskAugmentationKeepsLabel) {
  const auto td = load_task_domain(std::string(GOALREC_DATA_DIR) + "/tasks/blocks3");
  const auto probs = generate_task_problems(td.strips, td.id, td.goals, 4, 0.0, 1.0, 1);
  const auto vocab = OneHotVocab::from(*td.strips);
  for (const auto& p : probs) {
    // one bit for the action name plus one per argument
    double ones = 0;
    for (auto a : p.observations) ones += 1.0 + static_cast<double>(td.strips->actions[a].args.size());
    const auto ex = encode_task(p, vocab, 16, true);
    EXPECT_EQ(ex.size(), 16 - p.observations.size() + 1);
    for (const auto& e : ex) {
      EXPECT_EQ(e.label, p.true_goal);
      EXPECT_EQ(e.features.size(), 16 * vocab.width());
      EXPECT_EQ(std::accumulate(e.features.begin(), e.features.end(), 0.0), ones);
    }
  }
}
