#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace testutil {

struct Mail {
    std::string to = "ava000@audit.example";
    std::string from = "news@mail.shopmart.com";
    std::string subject = "Hello";
    std::string date = "Tue, 05 Mar 2024 14:05:00 +0000";
    std::string ip = "167.89.1.2";
    std::string id;
    std::string spf = "pass";
    std::string dkim = "pass";
    std::string body = "Plain body text.";
};

inline std::string eml(const Mail& m) {
    std::string s;
    s += "Received: from out.sendgrid.net (out.sendgrid.net [" + m.ip + "])\r\n";
    s += "\tby mx.audit.example with ESMTPS id 1\r\n";
    s += "\tfor <" + m.to + ">; " + m.date + "\r\n";
    s += "Authentication-Results: mx.audit.example; spf=" + m.spf + " smtp.mailfrom=x; dkim=" + m.dkim +
         " header.d=x\r\n";
    s += "From: Sender <" + m.from + ">\r\n";
    s += "To: " + m.to + "\r\n";
    s += "Subject: " + m.subject + "\r\n";
    s += "Date: " + m.date + "\r\n";
    if (!m.id.empty()) s += "Message-ID: <" + m.id + ">\r\n";
    s += "Content-Type: text/plain; charset=utf-8\r\n\r\n";
    s += m.body + "\r\n";
    return s;
}

inline std::string registry_csv() {
    return "local_part,index,service_name,service_kind,registration_date,sector\n"
           "ava000,0,Shopmart,online_service,2023-03-02,E-tailer\n"
           "leo001,1,Gadgetly,online_service,2023-03-05,E-tailer\n"
           "mia002,2,Newsbyte,online_service,2023-03-05,Media\n"
           "zed100,100,Chatterbox,mobile_app,2023-03-06,Social\n";
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("inboxaudit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
