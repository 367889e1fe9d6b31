#include <gtest/gtest.h>

#include "capspace/policy.hpp"

using namespace capspace;

namespace {

ErrorCode parse_error(const std::string& text) {
  try {
    parse_policy(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted " << text;
  return ErrorCode::ValidationError;
}

}  // namespace

TEST(Policy, ParseAndRenderRoundTrip) {
  for (const char* text : {"lasp", "austere mode=pure", "austere mode=measured deadline=50", "spry staleness=100",
                           "spry latency=30", "spry staleness=80 latency=20"}) {
    EXPECT_EQ(render(parse_policy(text)), text);
  }
  EXPECT_EQ(render(parse_policy("austere")), "austere mode=pure");
  EXPECT_EQ(render(parse_policy("spry latency=5 staleness=9")), "spry staleness=9 latency=5");
}

TEST(Policy, RejectsMalformedPolicies) {
  for (const char* bad : {"", "eventual", "austere mode=measured", "austere mode=pure deadline=5", "austere mode=soft",
                          "spry", "spry staleness=0", "spry latency=-1", "spry staleness=ten", "lasp extra=1",
                          "spry staleness=1 staleness=2", "spry =3"}) {
    EXPECT_EQ(parse_error(bad), ErrorCode::InvalidPolicy) << bad;
  }
}

TEST(Policy, LaspNeverWaits) {
  EXPECT_EQ(decide_on_deref(LaspPolicy{}, {false, 1'000'000}, 0), ResumePlan{ResumeNow{}});
  EXPECT_EQ(decide_on_store(LaspPolicy{}), ResumePlan{ResumeNow{}});
}

TEST(Policy, AustereAlwaysSynchronises) {
  AusterePolicy p{TxnMode::Pure, std::nullopt};
  EXPECT_EQ(decide_on_deref(p, {true, 0}, 0), ResumePlan{ResumeAfter{SyncKind::ReadTxn}});
  EXPECT_EQ(decide_on_store(p), ResumePlan{ResumeAfter{SyncKind::WriteTxn}});
}

TEST(Policy, SpryStalenessRefreshesOnlyWhenTooOld) {
  SpryPolicy p{100, std::nullopt};
  EXPECT_EQ(decide_on_deref(p, {false, 100}, 500), ResumePlan{ResumeNow{}});
  EXPECT_EQ(decide_on_deref(p, {false, 101}, 500), ResumePlan{ResumeAfter{SyncKind::Refresh}});
  EXPECT_EQ(decide_on_deref(p, {true, 101}, 500), ResumePlan{ResumeNow{}});
  EXPECT_EQ(decide_on_store(p), ResumePlan{ResumeNow{}});
}

TEST(Policy, SpryLatencyServesByDeadline) {
  EXPECT_EQ(decide_on_deref(SpryPolicy{std::nullopt, 30}, {false, 0}, 200),
            ResumePlan{(ResumeAtDeadline{230, std::nullopt})});
  EXPECT_EQ(decide_on_deref(SpryPolicy{80, 20}, {false, 500}, 200), ResumePlan{(ResumeAtDeadline{220, 80})});
}

TEST(Policy, TableAppliesReconfigurationFromItsEffectiveTime) {
  PolicyTable t;
  RegisterId r{"r"};
  t.declare(r, LaspPolicy{});
  t.reconfigure(r, SpryPolicy{50, std::nullopt}, 200);
  t.reconfigure(r, AusterePolicy{TxnMode::Pure, std::nullopt}, 100);
  EXPECT_EQ(t.at(r, 99), Policy{LaspPolicy{}});
  EXPECT_EQ(t.at(r, 100), Policy{(AusterePolicy{TxnMode::Pure, std::nullopt})});
  EXPECT_EQ(t.at(r, 250), Policy{(SpryPolicy{50, std::nullopt})});
  EXPECT_THROW(t.at(RegisterId{"nope"}, 0), Error);
  EXPECT_THROW(t.reconfigure(r, SpryPolicy{}, 5), Error);
}
