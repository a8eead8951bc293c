#include <stdio.h>
#include <cuda.h>
__global__ void produce(int *x) {
  *x = 41;
}
__global__ void consume(int *x, int *y) {
  *y = *x + 1;
}
int main(void) {
  int *x, *y, result;
  cudaStream_t a, b;
  cudaEvent_t ready;
  cudaStreamCreate(&a);
  cudaStreamCreate(&b);
  cudaEventCreate(&ready);
  cudaMalloc(&x, sizeof(int));
  cudaMalloc(&y, sizeof(int));
  cudaStreamWaitEvent(b, ready, 0);
  consume<<<1, 1, 0, b>>>(x, y);
  produce<<<1, 1, 0, a>>>(x);
  cudaEventRecord(ready, a);
  cudaDeviceSynchronize();
  cudaMemcpy(&result, y, sizeof(int), cudaMemcpyDeviceToHost);
  printf("%d\n", result);
  return 0;
}
