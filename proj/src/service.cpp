#include "progfill/service.hpp"

#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "progfill/checkpoint.hpp"
#include "progfill/png_io.hpp"

namespace progfill {
namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::map<std::string, int> parse_attributes(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw HttpError{400, "bad_attributes", std::string("attributes are not valid JSON: ") + e.what()};
  }
  if (!j.is_object()) throw HttpError{400, "bad_attributes", "attributes must be a JSON object"};
  std::map<std::string, int> out;
  for (const auto& [name, value] : j.items()) {
    if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1))
      throw HttpError{400, "bad_attributes", "attribute " + name + " must be 0 or 1"};
    out[name] = value.get<int>();
  }
  return out;
}

}  // namespace

CompletionService::CompletionService(const Model& model, ServiceOptions options)
    : model_(model), engine_(model), options_(options), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

CompletionService::~CompletionService() { stop(); }

void CompletionService::install_routes() {
  auto& svr = *server_;
  svr.set_payload_max_length(options_.max_payload_bytes);

  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 413)
      send_error(res, 413, "payload_too_large", "request body exceeds the configured limit");
    else if (res.status == 404)
      send_error(res, 404, "not_found", "no such endpoint");
    else
      send_error(res, res.status, "http_error", "request failed with status " + std::to_string(res.status));
  });

  svr.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"requests", requests_.load()}, {"forwards", engine_.forward_count()}}.dump(),
                    "application/json");
  });

  svr.Get("/model", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"stage", model_.stage()},
                         {"attributes", model_.attribute_names},
                         {"version", kContainerVersion},
                         {"step", model_.step}}
                        .dump(),
                    "application/json");
  });

  svr.Post("/complete", [this](const httplib::Request& req, httplib::Response& res) {
    requests_.fetch_add(1);
    try {
      if (!req.is_multipart_form_data())
        throw HttpError{400, "malformed_multipart", "expected multipart/form-data with image and mask parts"};
      if (!req.has_file("image")) throw HttpError{400, "missing_image", "multipart field 'image' is required"};
      if (!req.has_file("mask")) throw HttpError{400, "missing_mask", "multipart field 'mask' is required"};
      CompletionRequest cr;
      try {
        cr.observed = png::decode_image(as_bytes(req.get_file_value("image").content));
      } catch (const ImageIoError& e) {
        throw HttpError{400, "bad_image", e.what()};
      }
      try {
        cr.mask = png::decode_mask(as_bytes(req.get_file_value("mask").content));
      } catch (const ImageIoError& e) {
        throw HttpError{400, "bad_mask", e.what()};
      }
      if (req.has_file("attributes")) cr.attributes = parse_attributes(req.get_file_value("attributes").content);
      if (req.has_file("output_resolution")) {
        const std::string text = req.get_file_value("output_resolution").content;
        try {
          std::size_t used = 0;
          cr.output_resolution = std::stoi(text, &used);
          if (used != text.size()) throw std::invalid_argument(text);
        } catch (const std::logic_error&) {
          throw HttpError{400, "bad_output_resolution", "output_resolution must be an integer"};
        }
      }
      Completion done;
      try {
        done = engine_.complete(cr);
      } catch (const OversizedInput& e) {
        throw HttpError{413, "input_too_large", e.what()};
      } catch (const InvalidInput& e) {
        const std::string what = e.what();
        throw HttpError{400, what.find("attribute") != std::string::npos ? "bad_attributes" : "invalid_request", what};
      }
      json echo = json::object();
      for (std::size_t i = 0; i < model_.attribute_names.size(); ++i) echo[model_.attribute_names[i]] = done.attributes[i];
      const auto png = png::encode_image(done.image);
      res.set_header("X-Attributes", echo.dump());
      res.set_header("X-Model-Stage", std::to_string(model_.stage()));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    } catch (const HttpError& e) {
      send_error(res, e.status, e.code, e.message);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  });
}

int CompletionService::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void CompletionService::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

void CompletionService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace progfill
