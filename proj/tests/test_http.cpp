// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "review_service.hpp"
#include "sg3d/image.hpp"
#include "support.hpp"

#include <httplib.h>

namespace sg3d {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    tmp_ = std::make_unique<TempDir>("http");
    auto cfg = testing::small_config(2, *tmp_ / "run");
    cfg.last_stage = pipeline::Stage::kGraph;
    pipeline::run_pipeline(cfg);
    service_ = std::make_unique<review::ReviewService>(pipeline::Workspace::open(cfg.out));
    service_->mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    run_ = cfg.out;
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  json next(const std::string& reviewer, int expect = 200) {
    auto r = client_->Get("/tasks/next?reviewer=" + reviewer);
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, expect);
    return r->body.empty() ? json() : json::parse(r->body);
  }
  int answer(const std::string& id, const json& body) {
    auto r = client_->Post("/tasks/" + id + "/answer", body.dump(), "application/json");
    EXPECT_TRUE(r);
    return r ? r->status : -1;
  }

  std::unique_ptr<TempDir> tmp_;
  fs::path run_;
  std::unique_ptr<review::ReviewService> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpTest, NextTaskAndImage) {
  const json t = next("ann");
  EXPECT_EQ(t["kind"], "verify_label");
  EXPECT_TRUE(t["id"].get<std::string>().starts_with("obj"));
  EXPECT_EQ(t["reviewers_needed"], 2);
  EXPECT_GT(t["view"]["fov"].get<double>(), 0.0);
  auto img = client_->Get(t["image"].get<std::string>());
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 200);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  std::ofstream(*tmp_ / "task.png", std::ios::binary) << img->body;
  const auto decoded = read_rgb_image(*tmp_ / "task.png");
  EXPECT_EQ(decoded.width(), t["view"]["size"].get<int>());
  EXPECT_EQ(decoded.height(), t["view"]["size"].get<int>());
  EXPECT_EQ(client_->Get("/tasks/nope/image")->status, 404);
  EXPECT_EQ(client_->Get("/tasks/next")->status, 400);
}

TEST_F(HttpTest, AnswerStatusCodes) {
  const std::string id = next("ann")["id"];
  EXPECT_EQ(answer(id, {{"reviewer", "ann"}, {"answer", {{"correct", true}}}}), 200);
  EXPECT_EQ(answer(id, {{"reviewer", "ann"}, {"answer", {{"correct", true}}}}), 409);  // same reviewer twice
  EXPECT_EQ(answer(id, {{"reviewer", "bob"}, {"answer", {{"nonsense", 1}}}}), 400);
  EXPECT_EQ(answer(id, {{"answer", {{"correct", true}}}}), 400);
  EXPECT_EQ(answer("obj999/label", {{"reviewer", "bob"}, {"answer", {{"correct", true}}}}), 404);
  auto bad = client_->Post("/tasks/" + id + "/answer", "{not json", "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(answer(id, {{"reviewer", "bob"}, {"answer", {{"correct", true}}}}), 200);
  EXPECT_EQ(answer(id, {{"reviewer", "cy"}, {"answer", {{"correct", true}}}}), 409);  // closed
  // Answers are persisted as they arrive.
  const json tasks = pipeline::read_json(run_ / "tasks.json");
  bool found = false;
  for (const auto& t : tasks["tasks"])
    if (t["id"] == id) found = t["status"] == "resolved";
  EXPECT_TRUE(found);
}

TEST_F(HttpTest, ReviewerNeverSeesTheSameTaskTwice) {
  const std::string first = next("ann")["id"];
  ASSERT_EQ(answer(first, {{"reviewer", "ann"}, {"answer", {{"correct", true}}}}), 200);
  EXPECT_NE(next("ann")["id"], first);
  EXPECT_EQ(next("bob")["id"], first);  // still needs a second reviewer
}

TEST_F(HttpTest, DrainingTheQueueEndsWith204) {
  for (int guard = 0; guard < 1000; ++guard) {
    auto r = client_->Get("/tasks/next?reviewer=solo");
    ASSERT_TRUE(r);
    if (r->status == 204) {
      EXPECT_TRUE(r->body.empty());
      return;
    }
    const json t = json::parse(r->body);
    json a;
    if (t["kind"] == "verify_label") a = {{"correct", true}};
    else if (t["kind"] == "verify_mask") a = {{"accept", true}};
    else if (t["kind"] == "find_missing") a = {{"instances", json::array()}};
    else a = {{"polygon", json::array({{0, 0}, {10, 0}, {10, 10}})}};
    ASSERT_EQ(answer(t["id"], {{"reviewer", "solo"}, {"answer", a}}), 200) << t.dump();
  }
  FAIL() << "queue never drained";
}

TEST_F(HttpTest, SummaryAndApply) {
  auto s = client_->Get("/graph/summary");
  ASSERT_EQ(s->status, 200);
  const json before = json::parse(s->body);
  const int objects = before["objects"];
  ASSERT_GE(objects, 1);
  EXPECT_GT(before["tasks"]["pending"].get<int>(), 0);

  const std::string id = next("ann")["id"];
  answer(id, {{"reviewer", "ann"}, {"answer", {{"correct", false}}}});
  answer(id, {{"reviewer", "bob"}, {"answer", {{"correct", false}}}});
  auto a = client_->Post("/apply", "", "application/json");
  ASSERT_EQ(a->status, 200);
  const json report = json::parse(a->body);
  EXPECT_EQ(report["removed"].size(), 1u);
  const json after = json::parse(client_->Get("/graph/summary")->body);
  EXPECT_EQ(after["objects"].get<int>(), objects - 1);
  EXPECT_TRUE(graph::validate_graph_json(pipeline::read_json(run_ / "graph.json")).empty());
  EXPECT_EQ(pipeline::read_json(run_ / "graph.json")["objects"].size(), static_cast<std::size_t>(objects - 1));
  // Applying again changes nothing.
  const json again = json::parse(client_->Post("/apply", "", "application/json")->body);
  EXPECT_TRUE(again["removed"].empty());
}

TEST_F(HttpTest, ConcurrentAnswersAreSerialized) {
  const std::string id = next("ann")["id"];
  std::vector<std::thread> pool;
  std::vector<int> codes(8);
  for (int i = 0; i < 8; ++i)
    pool.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      const json body = {{"reviewer", "r" + std::to_string(i)}, {"answer", {{"correct", true}}}};
      codes[i] = c.Post("/tasks/" + id + "/answer", body.dump(), "application/json")->status;
    });
  for (auto& t : pool) t.join();
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 200), 2);
  EXPECT_EQ(std::count(codes.begin(), codes.end(), 409), 6);
}

}  // namespace
}  // namespace sg3d
