#include <stdio.h>
#include <cuda.h>
int main(void) {
  int *dev;
  cudaMalloc(&dev, sizeof(int));
  printf("before\n");
  *dev = 1;
  printf("after\n");
  return 0;
}
