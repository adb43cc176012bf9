// Copyright 2026 The sg3d Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mutex>
#include <string>

#include "sg3d/pipeline.hpp"

namespace httplib {
class Server;
}

namespace sg3d::review {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Request handlers of the review API over one run directory. Every call
/// holds a single lock, so graph and task mutations are serialized.
class ReviewService {
 public:
  explicit ReviewService(pipeline::Workspace workspace) : ws_(std::move(workspace)) {}

  Response next_task(const std::string& reviewer);                 // GET /tasks/next?reviewer=
  Response task_image(const std::string& task_id);                 // GET /tasks/{id}/image
  Response answer(const std::string& task_id, const std::string& body);  // POST /tasks/{id}/answer
  Response summary();                                              // GET /graph/summary
  Response apply();                                                // POST /apply

  /// Registers the routes above on an httplib server.
  void mount(httplib::Server& server);

 private:
  std::mutex mutex_;
  pipeline::Workspace ws_;
};

}  // namespace sg3d::review
