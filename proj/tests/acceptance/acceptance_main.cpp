// placeholder
#include <cstdio>
int main(int argc,char**argv){(void)argc;(void)argv;std::printf("placeholder\n");return 0;}
