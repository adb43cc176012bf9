// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#include "review_service.hpp"

#include <httplib.h>

#include "sg3d/detector.hpp"
#include "sg3d/error.hpp"

namespace sg3d::review {

namespace {

using nlohmann::json;

Response json_response(int status, const json& body) { return {status, "application/json", body.dump() + "\n"}; }

Response error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

int submit_http_status(verification::SubmitStatus s) {
  using S = verification::SubmitStatus;
  switch (s) {
    case S::kRecorded:
    case S::kResolved:
    case S::kFlagged: return 200;
    case S::kDuplicate:
    case S::kClosed: return 409;
    case S::kNotFound: return 404;
    case S::kInvalid: return 400;
  }
  return 500;
}

}  // namespace

Response ReviewService::next_task(const std::string& reviewer) {
  if (reviewer.empty()) return error_response(400, "reviewer query parameter is required");
  std::lock_guard lock(mutex_);
  const verification::Task* t = ws_.session().next_for(reviewer);
  if (!t) return {204, "application/json", ""};
  const auto& vocab = ws_.inputs().vocabulary;
  json j = {{"id", t->id},
            {"kind", verification::to_string(t->kind)},
            {"object", t->object_id ? json(graph::object_ref(*t->object_id)) : json(nullptr)},
            {"class_id", t->class_id},
            {"class_name", vocab.valid_object_class(t->class_id) ? vocab.name(t->class_id) : ""},
            {"view",
             {{"camera_id", t->view.camera_id},
              {"yaw", t->view.yaw},
              {"pitch", t->view.pitch},
              {"fov", t->view.fov},
              {"size", t->view.size}}},
            {"status", verification::to_string(t->status)},
            {"answers", t->answers.size()},
            {"reviewers_needed", ws_.session().options().reviewers},
            {"image", "/tasks/" + t->id + "/image"}};
  if (t->kind == verification::TaskKind::kVerifyMask || t->kind == verification::TaskKind::kDrawMask)
    j["overlay"] = detector::rle_to_json(rle_encode(verification::task_overlay(*t, ws_.pano_labels(t->view.camera_id))));
  return json_response(200, j);
}

Response ReviewService::task_image(const std::string& task_id) {
  std::lock_guard lock(mutex_);
  const verification::Task* t = ws_.session().find(task_id);
  if (!t) return error_response(404, "no task '" + task_id + "'");
  const auto png = encode_png(ws_.render(*t));
  return {200, "image/png", std::string(png.begin(), png.end())};
}

Response ReviewService::answer(const std::string& task_id, const std::string& body) {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception&) {
    return error_response(400, "body is not JSON");
  }
  if (!req.is_object() || !req.contains("reviewer") || !req["reviewer"].is_string() || !req.contains("answer"))
    return error_response(400, "body needs 'reviewer' and 'answer'");
  std::lock_guard lock(mutex_);
  const auto res = ws_.session().submit(task_id, req["reviewer"].get<std::string>(), req["answer"]);
  if (submit_http_status(res.status) == 200) ws_.save_tasks();
  return json_response(submit_http_status(res.status),
                       {{"status", verification::to_string(res.status)}, {"message", res.message}});
}

Response ReviewService::summary() {
  std::lock_guard lock(mutex_);
  json s = graph::graph_summary(ws_.graph());
  json counts = json::object();
  for (const auto& t : ws_.session().tasks()) {
    auto& slot = counts[std::string(verification::to_string(t.status))];
    slot = slot.is_null() ? 1 : slot.get<int>() + 1;
  }
  s["tasks"] = counts;
  return json_response(200, s);
}

Response ReviewService::apply() {
  std::lock_guard lock(mutex_);
  try {
    const auto report = ws_.apply();
    ws_.save();
    return json_response(200, report.to_json());
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
}

void ReviewService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, r.content_type);
  };
  server.Get("/tasks/next", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, next_task(req.get_param_value("reviewer")));
  });
  server.Get(R"(/tasks/(.+)/image)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, task_image(req.matches[1]));
  });
  server.Post(R"(/tasks/(.+)/answer)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, answer(req.matches[1], req.body));
  });
  server.Get("/graph/summary",
             [this, send](const httplib::Request&, httplib::Response& res) { send(res, summary()); });
  server.Post("/apply", [this, send](const httplib::Request&, httplib::Response& res) { send(res, apply()); });
}

}  // namespace sg3d::review
