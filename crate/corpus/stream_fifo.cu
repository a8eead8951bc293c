#include <stdio.h>
#include <cuda.h>
__global__ void put(int *cell, int v) {
  *cell = v;
}
__global__ void twice(int *cell) {
  *cell = *cell * 2;
}
int main(void) {
  int *dev, first, last;
  cudaStream_t s;
  cudaStreamCreate(&s);
  cudaMalloc(&dev, sizeof(int));
  put<<<1, 1, 0, s>>>(dev, 21);
  cudaMemcpyAsync(&first, dev, sizeof(int), cudaMemcpyDeviceToHost, s);
  twice<<<1, 1, 0, s>>>(dev);
  cudaMemcpyAsync(&last, dev, sizeof(int), cudaMemcpyDeviceToHost, s);
  cudaStreamSynchronize(s);
  printf("first %d last %d\n", first, last);
  cudaStreamDestroy(s);
  cudaFree(dev);
  return 0;
}
