#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace zipr {

// HTTP/JSON front end over the project pipeline. Each session is a project
// directory under <data>/sessions/<id>.
class DesignService {
public:
  explicit DesignService(std::filesystem::path data_dir);
  ~DesignService();
  DesignService(const DesignService&) = delete;
  DesignService& operator=(const DesignService&) = delete;

  // Blocks until stop().
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace zipr
