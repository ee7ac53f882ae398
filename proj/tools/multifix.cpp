#include <cstdio>

int main() {
    // placeholder until the cli module lands
    std::puts("multifix: not wired up yet");
    return 1;
}
