void scale(double a[], double s, int N);

int main() {
    double a[16];
    scale(a, 2.0, 16);
    return 0;
}
