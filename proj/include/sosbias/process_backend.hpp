/*
 * Copyright 2026 The sosbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Backend served by a child process over a JSON-lines protocol on its
// stdin / stdout. tools/hf_backend.py implements it for pretrained masked
// language models. One request per line, one response per line:
//
//   {"op":"info"}                               -> {"model_id":s,"hidden_size":d}
//   {"op":"tokenize","text":s}                  -> {"tokens":[s,...]}
//   {"op":"log_prob","tokens":[..],"masked":i}  -> {"log_prob":x}
//   {"op":"hidden","tokens":[..],"masked":i|null} -> {"hidden":[[x,..],..]}
//   {"op":"hidden_at","tokens":[..],"masked":i} -> {"hidden":[x,..]}
//   {"op":"head","hidden":[x,..],"token":s}     -> {"log_prob":x}
//
// Any response may instead be {"error":"message"}. Tokens are the model's
// own subword strings; special tokens are added by the server.

#ifndef SOSBIAS_PROCESS_BACKEND_HPP_
#define SOSBIAS_PROCESS_BACKEND_HPP_

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sosbias/backend.hpp"
#include "sosbias/error.hpp"

namespace sosbias {

class ProcessBackend : public HiddenStateBackend {
 public:
  explicit ProcessBackend(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw BackendError("process backend needs a command");
    spawn();
    try {
      const auto info = request({{"op", "info"}});
      model_id_ = info.at("model_id").get<std::string>();
      hidden_size_ = info.at("hidden_size").get<Eigen::Index>();
    } catch (const nlohmann::json::exception& e) {
      shutdown();
      throw BackendError(std::string("malformed info reply: ") + e.what());
    } catch (...) {
      shutdown();
      throw;
    }
  }

  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  ~ProcessBackend() override { shutdown(); }

  std::string model_id() const override { return model_id_; }
  Eigen::Index hidden_size() const override { return hidden_size_; }

  Tokens tokenize(std::string_view text) const override {
    return as<Tokens>(call({{"op", "tokenize"}, {"text", std::string(text)}}, "tokens"));
  }

  double masked_log_prob(std::span<const std::string> tokens, std::size_t masked) const override {
    return as<double>(call({{"op", "log_prob"},
                            {"tokens", Tokens(tokens.begin(), tokens.end())},
                            {"masked", masked}},
                           "log_prob"));
  }

  Eigen::MatrixXd hidden_states(std::span<const std::string> tokens,
                                std::optional<std::size_t> masked) const override {
    nlohmann::json req = {{"op", "hidden"}, {"tokens", Tokens(tokens.begin(), tokens.end())}};
    req["masked"] = masked ? nlohmann::json(*masked) : nlohmann::json(nullptr);
    const auto rows = call(req, "hidden");
    if (!rows.is_array()) throw BackendError("hidden states must be an array of rows");
    Eigen::MatrixXd h(static_cast<Eigen::Index>(rows.size()), hidden_size_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      h.row(static_cast<Eigen::Index>(i)) = to_vector(rows[i]).transpose();
    }
    return h;
  }

  Eigen::VectorXd masked_hidden(std::span<const std::string> tokens,
                                std::size_t masked) const override {
    return to_vector(call({{"op", "hidden_at"},
                           {"tokens", Tokens(tokens.begin(), tokens.end())},
                           {"masked", masked}},
                          "hidden"));
  }

  double head_log_prob(const Eigen::VectorXd& hidden, const std::string& target) const override {
    std::vector<double> v(hidden.data(), hidden.data() + hidden.size());
    return as<double>(call({{"op", "head"}, {"hidden", v}, {"token", target}}, "log_prob"));
  }

 private:
  // Closing the child's stdin asks it to exit; then reap it.
  void shutdown() {
    if (to_child_) std::fclose(to_child_);
    if (from_child_) std::fclose(from_child_);
    to_child_ = from_child_ = nullptr;
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void spawn() {
    // Close-on-exec keeps our pipe ends out of later children, which would
    // otherwise hold another backend's stdin open.
    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0) {
      throw BackendError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw BackendError("fork() failed");
    if (pid_ == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      std::vector<char*> args;
      for (auto& a : argv_) args.push_back(a.data());
      args.push_back(nullptr);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = fdopen(in_pipe[1], "w");
    from_child_ = fdopen(out_pipe[0], "r");
    if (!to_child_ || !from_child_) throw BackendError("fdopen() failed");
    // A dead child must surface as an error reply, not kill us.
    signal(SIGPIPE, SIG_IGN);
  }

  Eigen::VectorXd to_vector(const nlohmann::json& j) const {
    const auto v = as<std::vector<double>>(j);
    if (static_cast<Eigen::Index>(v.size()) != hidden_size_) {
      throw BackendError("hidden vector has " + std::to_string(v.size()) + " values, expected " +
                         std::to_string(hidden_size_));
    }
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  nlohmann::json request(const nlohmann::json& req) const {
    std::lock_guard<std::mutex> lock(mu_);
    const std::string line = req.dump() + "\n";
    if (std::fputs(line.c_str(), to_child_) < 0 || std::fflush(to_child_) != 0) {
      throw BackendError("backend process '" + argv_[0] + "' is not accepting requests");
    }
    std::string reply;
    int c;
    while ((c = std::fgetc(from_child_)) != EOF && c != '\n') reply += static_cast<char>(c);
    if (reply.empty()) throw BackendError("backend process '" + argv_[0] + "' closed its output");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed backend reply: ") + e.what());
    }
    if (j.contains("error")) throw BackendError("backend: " + j["error"].dump());
    return j;
  }

  // Sends `req` and returns field `key` of the reply.
  nlohmann::json call(const nlohmann::json& req, const char* key) const {
    const auto j = request(req);
    if (!j.is_object() || !j.contains(key)) {
      throw BackendError(std::string("backend reply lacks '") + key + "'");
    }
    return j[key];
  }

  template <typename T>
  static T as(const nlohmann::json& j) {
    try {
      return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed backend reply: ") + e.what());
    }
  }

  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  FILE* to_child_ = nullptr;
  FILE* from_child_ = nullptr;
  mutable std::mutex mu_;
  std::string model_id_;
  Eigen::Index hidden_size_ = 0;
};

}  // namespace sosbias

#endif  // SOSBIAS_PROCESS_BACKEND_HPP_
