#include <cstdlib>
#include <iostream>
#include <string>

#include "figac/service.hpp"

namespace {

std::string env_or(const char* name, const char* fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

}  // namespace

int main()
{
    const std::string host = env_or("FIGAC_HOST", "127.0.0.1");
    int port = 0;
    try {
        port = std::stoi(env_or("FIGAC_PORT", "8080"));
    }
    catch (const std::exception&) {
        std::cerr << "FIGAC_PORT must be an integer\n";
        return 2;
    }
    try {
        figac::service::Service service({env_or("FIGAC_DATA_DIR", "figac-data")});
        std::cout << "listening on " << host << ":" << port << std::endl;
        if (!service.listen(host, port)) {
            std::cerr << "cannot listen on " << host << ":" << port << "\n";
            return 3;
        }
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
